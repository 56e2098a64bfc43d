import json
import os

import numpy as np
import pytest

from localpar import flopsmodel
from localpar.cli import main
from localpar.model import load_checkpoint
from localpar.pipesim import PipelineConfig, simulate


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestUsage:
    def test_no_arguments_prints_usage(self, capsys):
        code, out, err = run(capsys)
        assert code == 1
        assert "usage" in err.lower()

    def test_unknown_subcommand(self, capsys):
        code, _, _ = run(capsys, "frobnicate")
        assert code == 1

    def test_version_flag(self, capsys):
        code, out, _ = run(capsys, "--version")
        assert code == 0

    def test_runtime_error_exit_code(self, capsys, tmp_path):
        code, _, err = run(capsys, "simulate", "--config",
                           str(tmp_path / "missing.toml"), "--out", str(tmp_path))
        assert code == 2
        assert "error" in err


class TestFlops:
    def test_csv_row_matches_formula_oracle(self, capsys):
        code, out, _ = run(capsys, "flops", "--model", "mlp4096", "--method",
                           "backprop", "--batch", "32", "--steps", "10")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "model,method,batch,steps,cost_flops,time_flops"
        model, method, batch, steps, cost, time = lines[1].split(",")
        c = flopsmodel.registry("mlp4096")
        expect = flopsmodel.method_cost(c, "backprop", 32, 10)
        assert (model, method, batch, steps) == ("mlp4096", "backprop", "32", "10")
        assert float(cost) == expect.cost
        assert float(time) == expect.time

    def test_json_format(self, capsys):
        code, out, _ = run(capsys, "flops", "--model", "resnet18", "--method",
                           "greedy", "--batch", "64", "--format", "json")
        assert code == 0
        rows = json.loads(out)
        assert rows[0]["method"] == "greedy"

    def test_unknown_model_fails(self, capsys):
        code, _, _ = run(capsys, "flops", "--model", "vgg")
        assert code == 2


class TestSimulate:
    def _config(self, tmp_path):
        cfg = tmp_path / "pipe.toml"
        cfg.write_text(
            "[pipeline]\n"
            "num_stages = 4\n"
            "microbatches = 8\n"
            'mode = "pipelined_backprop"\n'
            "boundary_activation_bytes = [12.3, 6.2, 3.1]\n")
        return cfg

    def test_report_matches_library(self, capsys, tmp_path):
        cfg = self._config(tmp_path)
        out_dir = tmp_path / "sim"
        code, _, _ = run(capsys, "simulate", "--config", str(cfg),
                         "--out", str(out_dir), "--emit-trace")
        assert code == 0
        report = json.loads((out_dir / "report.json").read_text())
        direct = simulate(PipelineConfig(num_stages=4, microbatches=8,
                                         boundary_activation_bytes=[12.3, 6.2, 3.1]))
        assert report["utilization"] == direct.utilization
        assert report["received_bytes"] == direct.received_bytes
        trace = (out_dir / "trace.csv").read_text().splitlines()
        assert trace[0] == "time,duration,stage,kind,item"
        assert len(trace) == 1 + 2 * 4 * 8  # fwd + bwd per stage per microbatch
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert set(manifest) == {"version", "argv", "config", "seed", "outputs"}
        assert str(out_dir / "trace.csv") in manifest["outputs"]


class TestTrain:
    def _train(self, capsys, out_dir, *extra):
        return run(capsys, "train", "--out", str(out_dir), "--samples", "256",
                   "--dim", "8", "--classes", "4", "--hidden", "8", "--depth", "3",
                   "--steps", "20", "--batch", "16", "--seed", "5", *extra)

    def test_artifacts_and_reproducibility(self, capsys, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        code1, out1, _ = self._train(capsys, a)
        code2, out2, _ = self._train(capsys, b)
        assert code1 == code2 == 0
        assert out1 == out2
        pa = load_checkpoint(a / "checkpoint.bin")
        pb = load_checkpoint(b / "checkpoint.bin")
        assert pa.keys() == pb.keys()
        for k in pa:
            assert np.array_equal(pa[k], pb[k])
        log = (a / "trainlog.csv").read_text().splitlines()
        assert log[0] == "step,block,local_loss,global_loss,global_acc,examples_seen,wallclock_ms"
        manifest = json.loads((a / "manifest.json").read_text())
        assert manifest["seed"] == 5

    def test_pipelined_lockstep_matches_any_job_count(self, capsys, tmp_path):
        a, b = tmp_path / "j1", tmp_path / "j3"
        self._train(capsys, a, "--pipelined", "lockstep", "--jobs", "1")
        self._train(capsys, b, "--pipelined", "lockstep", "--jobs", "3")
        pa = load_checkpoint(a / "checkpoint.bin")
        pb = load_checkpoint(b / "checkpoint.bin")
        for k in pa:
            assert np.array_equal(pa[k], pb[k])


class TestProbeAndDump:
    def test_cosine_probe_writes_profile(self, capsys, tmp_path):
        out_dir = tmp_path / "probe"
        code, _, _ = run(capsys, "probe", "--kind", "cosine", "--out", str(out_dir),
                         "--samples", "128", "--dim", "8", "--classes", "4",
                         "--hidden", "8", "--depth", "3", "--steps", "10",
                         "--batch", "16", "--num-batches", "4")
        assert code == 0
        lines = (out_dir / "cosine.csv").read_text().splitlines()
        assert lines[0] == "layer,cosine"
        assert len(lines) == 4  # header + one row per layer
        assert float(lines[-1].split(",")[1]) == 1.0

    def test_dump_filters_from_checkpoint(self, capsys, tmp_path):
        train_dir = tmp_path / "t"
        run(capsys, "train", "--out", str(train_dir), "--samples", "64",
            "--dim", "6", "--classes", "3", "--hidden", "5", "--depth", "2",
            "--steps", "5", "--batch", "16")
        out = tmp_path / "filters.csv"
        code, _, _ = run(capsys, "dump-filters", "--checkpoint",
                         str(train_dir / "checkpoint.bin"), "--out", str(out))
        assert code == 0
        rows = out.read_text().splitlines()
        assert len(rows) == 5
        assert all(len(r.split(",")) == 6 for r in rows)


class TestSweepAndPareto:
    def test_end_to_end_frontier(self, capsys, tmp_path):
        cfg = tmp_path / "sweep.toml"
        cfg.write_text(
            "[model]\n"
            "input_dim = 8\nhidden = 8\ndepth = 2\nclasses = 4\n"
            "[sweep]\n"
            'schemes = ["backprop", "greedy"]\n'
            "batch_sizes = [16, 32]\n"
            "learning_rates = [0.01]\n"
            "seeds = [0]\n"
            "example_budget = 1600\n"
            "[data]\n"
            "samples = 128\nseparation = 8.0\n")
        sweep_dir = tmp_path / "sweep"
        code, _, _ = run(capsys, "sweep", "--config", str(cfg),
                         "--out", str(sweep_dir))
        assert code == 0
        records = sweep_dir / "runs" / "records.jsonl"
        assert sum(1 for _ in open(records)) == 4
        pareto_dir = tmp_path / "front"
        code, _, _ = run(capsys, "pareto", "--config", str(cfg), "--records",
                         str(records), "--cutoff", "1.2", "--out", str(pareto_dir))
        assert code == 0
        lines = (pareto_dir / "frontier.csv").read_text().splitlines()
        assert lines[0] == "cutoff,scheme,batch,lr,seed,cost_flops,time_flops,steps"
        assert len(lines) >= 2

"""Command-line entry point.

Subcommands: train, sweep, pareto, flops, simulate, probe, dump-filters.
Every artifact-producing command writes a manifest.json (full config,
seed, version, output paths) next to its results, so a run can be
reproduced from the manifest alone. Exit codes: 0 success, 1 usage
error, 2 runtime failure.
"""

import argparse
import json
import os
import subprocess
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import __version__, data, flopsmodel, pareto, pipesim, probes
from .executor import train_pipelined, train_sequential
from .model import NetworkSpec, Scheme, load_checkpoint, save_checkpoint
from .tensor import Rng


def _version_string():
    try:
        rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"],
                             capture_output=True, text=True, timeout=5,
                             cwd=os.path.dirname(__file__))
        git = rev.stdout.strip() if rev.returncode == 0 else "unknown"
    except Exception:
        git = "unknown"
    return f"localpar {__version__} ({git})"


def _write_manifest(out_dir, args, outputs):
    manifest = {
        "version": _version_string(),
        "argv": sys.argv[1:],
        "config": {k: v for k, v in vars(args).items() if k != "func"},
        "seed": getattr(args, "seed", None),
        "outputs": outputs,
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, default=str)
    return path


def _load_toml(path):
    with open(path, "rb") as f:
        return tomllib.load(f)


def _resolve_dataset(args):
    if args.data == "synthetic":
        return data.synthetic_clusters(Rng(args.seed, stream=99), args.samples,
                                       args.dim, args.classes, args.separation)
    if args.data == "cifar":
        root = args.data_dir or os.environ.get("LOCALPAR_DATA_DIR")
        if not root:
            raise FileNotFoundError("set --data-dir or LOCALPAR_DATA_DIR for CIFAR data")
        paths = sorted(p for p in os.listdir(root) if p.startswith("data_batch"))
        if not paths:
            raise FileNotFoundError(f"no data_batch files under {root}")
        ds = data.load_cifar10_binary([os.path.join(root, p) for p in paths],
                                      max_records=args.samples)
        if args.standardize:
            ds = data.standardize(ds)
        return ds
    raise ValueError(f"unknown data source {args.data!r}")


def _add_data_flags(p):
    p.add_argument("--data", choices=["synthetic", "cifar"], default="synthetic")
    p.add_argument("--data-dir", default=None)
    p.add_argument("--samples", type=int, default=4096)
    p.add_argument("--dim", type=int, default=64, help="synthetic input dim")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--separation", type=float, default=6.0)
    p.add_argument("--standardize", action="store_true")


def _add_net_flags(p):
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--scheme", default="greedy",
                   help="backprop | greedy | overlapping | chunked:J | last_k:K")


def cmd_train(args):
    ds = _resolve_dataset(args)
    spec = NetworkSpec(ds.dim, args.hidden, args.depth, ds.num_classes,
                       Scheme.parse(args.scheme))
    os.makedirs(args.out, exist_ok=True)
    if args.pipelined:
        log, params = train_pipelined(spec, ds, args.optimizer, args.lr, args.steps,
                                      args.batch, args.seed, mode=args.pipelined,
                                      jobs=args.jobs, eval_every=args.eval_every)
    else:
        log, params = train_sequential(spec, ds, args.optimizer, args.lr, args.steps,
                                       args.batch, args.seed,
                                       eval_every=args.eval_every)
    log_csv = os.path.join(args.out, "trainlog.csv")
    log_jsonl = os.path.join(args.out, "trainlog.jsonl")
    ckpt = os.path.join(args.out, "checkpoint.bin")
    log.write_csv(log_csv)
    log.write_jsonl(log_jsonl)
    save_checkpoint(ckpt, params)
    _write_manifest(args.out, args, [log_csv, log_jsonl, ckpt])
    final = log.final_eval("train_loss")
    print(f"final train loss {final:.4f}" if final is not None else "done")
    return 0


def cmd_sweep(args):
    raw = _load_toml(args.config)
    cfg = pareto.SweepConfig(
        model_spec=raw["model"],
        schemes=raw["sweep"]["schemes"],
        batch_sizes=raw["sweep"]["batch_sizes"],
        optimizer=raw["sweep"].get("optimizer", "adam"),
        learning_rates=raw["sweep"].get("learning_rates"),
        seeds=raw["sweep"].get("seeds", [args.seed]),
        example_budget=raw["sweep"].get("example_budget", 200_000),
        metric=raw["sweep"].get("metric", "train_loss"),
    )
    ds = _dataset_from_config(raw.get("data", {}), cfg.model_spec, args.seed)
    os.makedirs(args.out, exist_ok=True)
    records = pareto.run_sweep(cfg, ds, jobs=args.jobs)
    runs_dir = os.path.join(args.out, "runs")
    os.makedirs(runs_dir, exist_ok=True)
    out = os.path.join(runs_dir, "records.jsonl")
    pareto.write_records_jsonl(records, out)
    _write_manifest(args.out, args, [out])
    print(f"{len(records)} runs -> {out}")
    return 0


def _dataset_from_config(dcfg, model_spec, seed):
    kind = dcfg.get("kind", "synthetic")
    if kind == "synthetic":
        return data.synthetic_clusters(
            Rng(seed, stream=99), dcfg.get("samples", 4096),
            model_spec["input_dim"], model_spec["classes"],
            dcfg.get("separation", 6.0))
    if kind == "cifar":
        root = dcfg.get("dir") or os.environ.get("LOCALPAR_DATA_DIR")
        paths = sorted(p for p in os.listdir(root) if p.startswith("data_batch"))
        return data.load_cifar10_binary([os.path.join(root, p) for p in paths],
                                        max_records=dcfg.get("samples", 4096))
    raise ValueError(f"unknown data kind {kind!r}")


def cmd_pareto(args):
    raw = _load_toml(args.config)
    ms = raw["model"]
    constants = flopsmodel.mlp_constants(ms["hidden"], ms["depth"],
                                         ms["input_dim"], ms["classes"])
    records = pareto.read_records_jsonl(args.records)
    direction = "le" if args.metric.endswith("loss") else "ge"
    points = []
    for cutoff in args.cutoff:
        points.extend(pareto.frontier_at_cutoff(records, constants, cutoff, direction))
    os.makedirs(args.out, exist_ok=True)
    out = os.path.join(args.out, "frontier.csv")
    pareto.write_frontier_csv(points, out)
    _write_manifest(args.out, args, [out])
    print(f"{len(points)} frontier points -> {out}")
    return 0


def cmd_flops(args):
    constants = flopsmodel.registry(args.model)
    batches = ([int(b) for b in args.batch.split(",")] if args.batch
               else [2 ** p for p in range(4, 13)])
    rows = []
    for batch in batches:
        for method in (flopsmodel.METHODS if args.method == "all" else [args.method]):
            ks = [None]
            if method == "chunked":
                ks = args.chunks or [2, 3]
            elif method == "last_k":
                ks = args.chunks or [1, 2]
            for k in ks:
                mc = flopsmodel.method_cost(constants, method, batch, args.steps, k=k)
                rows.append({"model": args.model, "method": mc.method,
                             "batch": batch, "steps": args.steps,
                             "cost_flops": mc.cost, "time_flops": mc.time})
    if args.format == "json":
        print(json.dumps(rows, indent=2))
    else:
        print("model,method,batch,steps,cost_flops,time_flops")
        for r in rows:
            print(f"{r['model']},{r['method']},{r['batch']},{r['steps']},"
                  f"{r['cost_flops']!r},{r['time_flops']!r}")
    return 0


def cmd_simulate(args):
    raw = _load_toml(args.config)
    cfg = pipesim.PipelineConfig(**raw["pipeline"])
    report = pipesim.simulate(cfg, items=args.items, keep_trace=args.emit_trace)
    os.makedirs(args.out, exist_ok=True)
    outputs = []
    report_path = os.path.join(args.out, "report.json")
    with open(report_path, "w") as f:
        json.dump(report.to_dict(), f, indent=2)
    outputs.append(report_path)
    if args.emit_trace:
        trace_path = os.path.join(args.out, "trace.csv")
        pipesim.write_trace_csv(report.events, trace_path)
        outputs.append(trace_path)
    _write_manifest(args.out, args, outputs)
    print(f"report -> {report_path}")
    return 0


def cmd_probe(args):
    ds = _resolve_dataset(args)
    spec = NetworkSpec(ds.dim, args.hidden, args.depth, ds.num_classes,
                       Scheme.parse(args.scheme))
    os.makedirs(args.out, exist_ok=True)
    outputs = []
    if args.kind == "cosine":
        _, params = train_sequential(spec, ds, args.optimizer, args.lr,
                                     args.steps, args.batch, args.seed)
        batches = data.BatchIterator(ds, args.batch, Rng(args.seed, stream=3))
        stream = iter(lambda: batches.next_batch(), None)
        profile = probes.mean_cosine_profile(spec, params, stream, args.num_batches)
        out = os.path.join(args.out, "cosine.csv")
        with open(out, "w") as f:
            f.write("layer,cosine\n")
            for i, c in enumerate(profile):
                f.write(f"{i},{c}\n")
        outputs.append(out)
    elif args.kind == "chunks":
        js = args.chunks or [1, 2, 4, spec.depth]
        rows = probes.chunk_ablation(spec, js, ds, args.seed, args.optimizer,
                                     args.lr, args.steps, args.batch)
        out = os.path.join(args.out, "chunk_ablation.csv")
        with open(out, "w") as f:
            f.write("chunks,train_loss,train_acc,test_loss,test_acc\n")
            for r in rows:
                f.write(f"{r.chunks},{r.train_loss},{r.train_acc},"
                        f"{r.test_loss},{r.test_acc}\n")
        outputs.append(out)
    elif args.kind == "random-labels":
        curves = probes.random_label_capacity(spec, ds, args.seed,
                                              opt_name=args.optimizer, lr=args.lr,
                                              steps=args.steps, batch_size=args.batch)
        out = os.path.join(args.out, "random_labels.csv")
        with open(out, "w") as f:
            f.write("scheme,step,examples_seen,train_acc\n")
            for scheme_s, hist in curves.items():
                for step, ex, acc in hist:
                    f.write(f"{scheme_s},{step},{ex},{acc}\n")
        outputs.append(out)
    else:
        raise ValueError(f"unknown probe {args.kind!r}")
    _write_manifest(args.out, args, outputs)
    print(f"wrote {outputs[0]}")
    return 0


def cmd_dump_filters(args):
    params = load_checkpoint(args.checkpoint)
    probes.dump_first_layer(params, args.out, max_rows=args.max_rows)
    print(f"wrote {args.out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="localpar", description=__doc__)
    p.add_argument("--version", action="version", version=_version_string())
    sub = p.add_subparsers(dest="command")

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default="out")

    tp = sub.add_parser("train", help="train one network")
    common(tp)
    _add_data_flags(tp)
    _add_net_flags(tp)
    tp.add_argument("--optimizer", choices=["adam", "sgdm"], default="adam")
    tp.add_argument("--lr", type=float, default=1e-3)
    tp.add_argument("--steps", type=int, default=500)
    tp.add_argument("--batch", type=int, default=64)
    tp.add_argument("--eval-every", type=int, default=50)
    tp.add_argument("--pipelined", choices=["lockstep", "async"], default=None)
    tp.add_argument("--jobs", type=int, default=None)
    tp.set_defaults(func=cmd_train)

    sp = sub.add_parser("sweep", help="batch-size x lr x scheme sweep")
    common(sp)
    sp.add_argument("--config", required=True)
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    pp = sub.add_parser("pareto", help="extract Pareto frontier from sweep records")
    common(pp)
    pp.add_argument("--config", required=True)
    pp.add_argument("--records", required=True)
    pp.add_argument("--cutoff", type=float, nargs="+", required=True)
    pp.add_argument("--metric", default="train_loss")
    pp.set_defaults(func=cmd_pareto)

    fp = sub.add_parser("flops", help="cost/time table from the FLOPs model")
    fp.add_argument("--model", required=True)
    fp.add_argument("--method", default="all")
    fp.add_argument("--batch", default=None, help="comma list; default 2^4..2^12")
    fp.add_argument("--steps", type=int, default=1000)
    fp.add_argument("--chunks", type=int, nargs="+", default=None)
    fp.add_argument("--format", choices=["csv", "json"], default="csv")
    fp.set_defaults(func=cmd_flops)

    mp = sub.add_parser("simulate", help="pipeline simulator")
    common(mp)
    mp.add_argument("--config", required=True)
    mp.add_argument("--items", type=int, default=None)
    mp.add_argument("--emit-trace", action="store_true")
    mp.set_defaults(func=cmd_simulate)

    rp = sub.add_parser("probe", help="diagnostic probes")
    common(rp)
    _add_data_flags(rp)
    _add_net_flags(rp)
    rp.add_argument("--kind", choices=["cosine", "chunks", "random-labels"],
                    required=True)
    rp.add_argument("--optimizer", choices=["adam", "sgdm"], default="adam")
    rp.add_argument("--lr", type=float, default=1e-3)
    rp.add_argument("--steps", type=int, default=300)
    rp.add_argument("--batch", type=int, default=64)
    rp.add_argument("--num-batches", type=int, default=100)
    rp.add_argument("--chunks", type=int, nargs="+", default=None)
    rp.set_defaults(func=cmd_probe)

    dp = sub.add_parser("dump-filters", help="first-layer weight grid as CSV")
    dp.add_argument("--checkpoint", required=True)
    dp.add_argument("--out", required=True)
    dp.add_argument("--max-rows", type=int, default=None)
    dp.set_defaults(func=cmd_dump_filters)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 1
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except (BrokenPipeError, KeyboardInterrupt):
        return 2
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

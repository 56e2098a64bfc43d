import pytest

from localpar.pipesim import (PipelineConfig, communication_report,
                              memory_report, simulate, write_trace_csv)


def balanced(mode="pipelined_backprop", D=4, M=8, **kw):
    return PipelineConfig(num_stages=D, forward_cycles=1.0, backward_cycles=1.0,
                          microbatches=M, mode=mode, **kw)


class TestBackpropSchedule:
    def test_balanced_utilization_is_fill_drain_formula(self):
        # M units of work per stage over an M + D - 1 slot schedule
        rep = simulate(balanced(D=4, M=8))
        for u in rep.utilization:
            assert u == pytest.approx(8 / 11, rel=1e-12)

    def test_utilization_improves_with_more_microbatches(self):
        u4 = simulate(balanced(M=4)).mean_utilization
        u16 = simulate(balanced(M=16)).mean_utilization
        u64 = simulate(balanced(M=64)).mean_utilization
        assert u4 < u16 < u64 < 1.0

    def test_single_stage_fully_utilized(self):
        rep = simulate(balanced(D=1, M=4))
        assert rep.utilization == [1.0]

    def test_work_conserved(self):
        cfg = balanced(D=3, M=5, aux_cycles=[0.0, 0.0, 0.5])
        rep = simulate(cfg, items=2)
        # per minibatch each stage does M forwards and M backwards
        for s in range(3):
            expect = 2 * 5 * (cfg.forward_cycles[s] + cfg.backward_cycles[s]
                              + (cfg.aux_cycles[s] if s == 2 else 0.0))
            assert rep.busy_cycles[s] == pytest.approx(expect, rel=1e-12)

    def test_trace_causality(self, tmp_path):
        rep = simulate(balanced(D=3, M=4), keep_trace=True)
        fwd_end = {}
        for e in sorted(rep.events, key=lambda e: e.time):
            if e.kind == "fwd":
                if e.stage > 0:
                    assert e.time >= fwd_end[(e.stage - 1, e.item)]
                fwd_end[(e.stage, e.item)] = e.time + e.duration
        path = tmp_path / "trace.csv"
        write_trace_csv(rep.events, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "time,duration,stage,kind,item"
        assert len(lines) == 1 + len(rep.events)


class TestLocalSchedule:
    def test_long_run_utilization_approaches_one(self):
        rep = simulate(balanced(mode="chunked_local", D=4), items=400)
        assert min(rep.utilization) >= 0.99

    def test_default_run_length_scales_with_depth(self):
        rep = simulate(balanced(mode="chunked_local", D=4))
        assert rep.throughput_whole * rep.total_cycles == 400

    def test_no_stage_idles_between_fill_and_drain(self):
        # stage s waits s cycles at the start and D-1-s at the end, so every
        # stage's busy time is makespan minus the D-1 cycle fill+drain
        rep = simulate(balanced(mode="chunked_local", D=3), items=50)
        for busy in rep.busy_cycles:
            assert busy == pytest.approx(rep.total_cycles - 2.0, rel=1e-12)


MB = 1.0


def comm_cfg(mode):
    return PipelineConfig(num_stages=4, boundary_activation_bytes=[12.3, 6.2, 3.1],
                          mode=mode)


class TestCommunication:
    def test_local_per_stage_volumes(self):
        recv, trans = communication_report(comm_cfg("chunked_local"))
        assert recv == [0.0, 12.3, 6.2, 3.1]
        assert trans == [12.3, 6.2, 3.1, 0.0]
        assert sum(recv) + sum(trans) == pytest.approx(43.2, abs=0.05)

    def test_backprop_per_stage_volumes(self):
        recv, trans = communication_report(comm_cfg("pipelined_backprop"))
        assert recv == [12.3, 18.5, 9.3, 3.1]
        assert trans == recv
        assert sum(recv) + sum(trans) == pytest.approx(86.4, abs=0.05)

    def test_backprop_total_is_twice_local(self):
        lr, lt = communication_report(comm_cfg("chunked_local"), items=3)
        br, bt = communication_report(comm_cfg("pipelined_backprop"), items=3)
        assert sum(br) + sum(bt) == pytest.approx(2 * (sum(lr) + sum(lt)), rel=1e-12)

    def test_two_stage_unit_boundary(self):
        cfg = PipelineConfig(num_stages=2, boundary_activation_bytes=[1.0],
                             mode="chunked_local")
        recv, trans = communication_report(cfg)
        assert sum(recv) + sum(trans) == 2.0
        cfg.mode = "pipelined_backprop"
        recv, trans = communication_report(cfg)
        assert sum(recv) + sum(trans) == 4.0

    def test_flow_conservation(self):
        for mode in ("chunked_local", "pipelined_backprop"):
            recv, trans = communication_report(comm_cfg(mode), items=7)
            assert sum(recv) == pytest.approx(sum(trans), rel=1e-12)


class TestMemory:
    def _mem(self, M, mode="pipelined_backprop", recomputation=True):
        cfg = balanced(mode=mode, D=4, M=M, recomputation=recomputation,
                       parameter_bytes=10.0, aux_parameter_bytes=1.0,
                       input_bytes_per_microbatch=2.0, stage_activation_bytes=3.0)
        return memory_report(cfg)

    def test_backprop_memory_strictly_increasing_in_microbatches(self):
        prev = self._mem(1)
        for M in (2, 4, 8, 16):
            cur = self._mem(M)
            assert all(c > p for c, p in zip(cur, prev))
            prev = cur

    def test_local_memory_flat_in_microbatches(self):
        assert self._mem(1, mode="chunked_local") == self._mem(64, mode="chunked_local")

    def test_recomputation_strictly_reduces_memory_when_pipelined(self):
        with_r = self._mem(8, recomputation=True)
        without = self._mem(8, recomputation=False)
        assert all(w < wo for w, wo in zip(with_r, without))

    def test_single_microbatch_recomputation_neutral(self):
        assert self._mem(1, recomputation=True) == self._mem(1, recomputation=False)

    def test_live_counts_equal_microbatches(self):
        rep = simulate(balanced(D=4, M=8))
        assert rep.live_microbatches == [8, 8, 8, 8]


class TestConfigValidation:
    def test_rejects_bad_mode(self):
        with pytest.raises(ValueError):
            PipelineConfig(num_stages=2, mode="ring")

    def test_rejects_zero_cycles(self):
        with pytest.raises(ValueError):
            PipelineConfig(num_stages=2, forward_cycles=0.0)

    def test_rejects_wrong_length_lists(self):
        with pytest.raises(ValueError):
            PipelineConfig(num_stages=3, forward_cycles=[1.0, 1.0])

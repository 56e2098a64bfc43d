import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from localpar.flopsmodel import (CostModelConstants, METHODS, known_models,
                                 method_cost, mlp_constants, mlp_param_count,
                                 registry)


class TestMlpConstants:
    def test_published_mlp4096_values(self):
        c = mlp_constants(4096, 8, 3072, 10)
        assert c.forward_cost == 32514176.0
        assert c.aux_cost == 77884.0
        assert c.backward_multiplier == 1.5
        assert c.layers == 8

    def test_unit_scale_formula(self):
        # N=L=I=C=1: first layer (2-1)+1+2 = 4; aux (2-1)+1+5 = 7
        c = mlp_constants(1, 1, 1, 1)
        assert c.forward_cost == 4.0
        assert c.aux_cost == 7.0

    def test_independent_arithmetic_oracle_n1024(self):
        # spreadsheet-style evaluation of the same published formulas
        N, L, I, C = 1024, 8, 3072, 10
        first = (2 * I * N - I) + N + 2 * N
        hidden = (2 * N * N - N) + N + 2 * N
        expect_fwd = (first + (L - 1) * hidden) / L
        expect_aux = (2 * N * C - N) + C + 5 * C
        c = mlp_constants(N, L, I, C)
        assert c.forward_cost == expect_fwd
        assert c.aux_cost == expect_aux

    def test_param_count(self):
        assert mlp_param_count(2, 2, 3, 4) == (3 * 2 + 2) + (2 * 2 + 2) + (2 * 4 + 4)


class TestRegistry:
    def test_resnet50(self):
        c = registry("resnet50")
        assert c.layers == 17
        assert c.parameters == 38711720
        assert c.forward_cost == 5479411.176470588
        assert c.aux_cost == 3382457.3529411764
        assert c.backward_multiplier == 2.0280375672996596

    def test_resnet18(self):
        c = registry("resnet18")
        assert c.layers == 9
        assert c.parameters == 13170792
        assert c.forward_cost == 1640544.352941176
        assert c.aux_cost == 565900.6470588235
        assert c.backward_multiplier == 2.08565879129763

    def test_transformers(self):
        s = registry("transformer_small")
        assert (s.layers, s.forward_cost, s.aux_cost, s.backward_multiplier) == \
            (4, 13837446.0, 1163904.0, 1.6581083035860107)
        l = registry("transformer_large")
        assert (l.layers, l.forward_cost, l.aux_cost, l.backward_multiplier) == \
            (6, 51037318.0, 4653696.0, 1.7526391044859857)

    def test_unknown_model(self):
        with pytest.raises(KeyError):
            registry("alexnet")

    def test_known_models(self):
        assert "mlp4096" in known_models()


def toy_constants(fwd=1.0, aux=0.0, bm=1.0, L=4, params=None):
    return CostModelConstants(layers=L, forward_cost=fwd, aux_cost=aux or 1e-9,
                              backward_multiplier=bm, parameters=params)


def random_constants(rng):
    return CostModelConstants(
        layers=int(rng.integers(2, 20)),
        forward_cost=float(rng.uniform(1e3, 1e8)),
        aux_cost=float(rng.uniform(1e2, 1e6)),
        backward_multiplier=float(rng.uniform(1.0, 3.0)),
        parameters=int(rng.integers(1e4, 1e8)))


class TestMethodCost:
    def test_backprop_direct_formula_oracle(self):
        # evaluated by hand before implementation:
        # cpe = 2.5 * (8*32514176 + 77884); cost = cpe + 10*params
        c = mlp_constants(4096, 8, 3072, 10)
        mc = method_cost(c, "backprop", batch_size=1, steps=1)
        expect = 2.5 * (8 * 32514176.0 + 77884.0) + 10.0 * c.parameters
        assert mc.cost == expect
        assert mc.time == expect

    def test_chunked1_degenerates_to_backprop(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            c = random_constants(rng)
            batch = int(rng.integers(1, 4096))
            steps = int(rng.integers(1, 10000))
            bp = method_cost(c, "backprop", batch, steps)
            ch = method_cost(c, "chunked", batch, steps, k=1)
            assert ch.cost == bp.cost
            assert ch.time == bp.time

    def test_greedy_time_identity(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            c = random_constants(rng)
            batch = int(rng.integers(1, 4096))
            mc = method_cost(c, "greedy", batch, 17)
            assert mc.time == mc.cost / (batch * c.layers)

    def test_toy_greedy_parallelism_factor(self):
        c = toy_constants(fwd=1.0, aux=0.0, bm=1.0, L=4)
        bp = method_cost(c, "backprop", 8, 3)
        gr = method_cost(c, "greedy", 8, 3)
        assert gr.time == pytest.approx(bp.time / 4, rel=1e-9)

    def test_overlapping_formula(self):
        c = random_constants(np.random.default_rng(2))
        L, fwd, aux, bm = c.layers, c.forward_cost, c.aux_cost, c.backward_multiplier
        mc = method_cost(c, "overlapping", 16, 5)
        cpe = (fwd + aux) * L + (L - 1) * bm * (2 * fwd + aux) + bm * (fwd + aux)
        cost = cpe * 5 * 16 + 5 * (c.optimizer_cost + 2 * c.parameters)
        assert mc.cost == pytest.approx(cost, rel=1e-12)
        assert mc.time == pytest.approx(cost / (16 * L), rel=1e-12)

    def test_last_k_formula_and_parallelism(self):
        c = random_constants(np.random.default_rng(3))
        L, fwd, aux, bm = c.layers, c.forward_cost, c.aux_cost, c.backward_multiplier
        for k in (1, 2, L):
            mc = method_cost(c, "last_k", 32, 7, k=k)
            cpe = (L * fwd + aux) + bm * (k * fwd + aux)
            cost = cpe * 7 * 32 + 7 * c.optimizer_cost
            parallel = (L + k * bm) / (k * (1 + bm))
            assert mc.cost == pytest.approx(cost, rel=1e-12)
            assert mc.time == pytest.approx(cost / (32 * parallel), rel=1e-12)
            assert parallel >= 1.0

    def test_k_bounds(self):
        c = toy_constants()
        for method in ("chunked", "last_k"):
            with pytest.raises(ValueError):
                method_cost(c, method, 1, 1, k=0)
            with pytest.raises(ValueError):
                method_cost(c, method, 1, 1, k=c.layers + 1)

    def test_time_never_exceeds_cost(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            c = random_constants(rng)
            for method in METHODS:
                k = 2 if method in ("chunked", "last_k") else None
                mc = method_cost(c, method, 4, 3, k=k)
                assert mc.time <= mc.cost

    @given(st.integers(1, 12), st.integers(1, 500), st.integers(1, 1024))
    @settings(max_examples=50, deadline=None)
    def test_cost_linear_in_steps(self, L, steps, batch):
        c = CostModelConstants(layers=L, forward_cost=100.0, aux_cost=10.0,
                               backward_multiplier=1.5, parameters=1000)
        one = method_cost(c, "backprop", batch, 1).cost
        many = method_cost(c, "backprop", batch, steps).cost
        assert many == pytest.approx(steps * one, rel=1e-12)

    def test_backprop_time_independent_of_batch(self):
        # the per-example term is batch-proportional, so time = cost/batch
        # is batch-free; only the per-step optimizer term divides down
        c = CostModelConstants(layers=9, forward_cost=1e6, aux_cost=1e4,
                               backward_multiplier=2.0, parameters=10)
        t1 = method_cost(c, "backprop", 1, 10)
        t2 = method_cost(c, "backprop", 4096, 10)
        assert t2.time == pytest.approx(t1.time, rel=1e-5)

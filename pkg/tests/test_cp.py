import json

import numpy as np
import pytest

from tensorcast import (
    FactorSet,
    SolverConfig,
    Tensor3,
    extract_time_factor,
    frobenius_norm,
    nncp_decompose,
    reconstruct,
)
from tensorcast.cp import factors_from_json, factors_to_json


def rank1_example():
    return FactorSet(
        rank=1,
        a=np.array([[1.0], [2.0]]),
        b=np.array([[1.0], [3.0]]),
        c=np.array([[2.0], [1.0]]),
    )


def synthetic(rng, dims, rank):
    f = FactorSet(
        rank=rank,
        a=rng.uniform(size=(dims[0], rank)),
        b=rng.uniform(size=(dims[1], rank)),
        c=rng.uniform(size=(dims[2], rank)),
    )
    return reconstruct(f)


class TestFactorSet:
    def test_rejects_negative_entries(self):
        with pytest.raises(ValueError):
            FactorSet(rank=1, a=np.array([[-1.0]]), b=np.array([[1.0]]), c=np.array([[1.0]]))

    def test_rejects_rank_mismatch(self):
        with pytest.raises(ValueError):
            FactorSet(rank=2, a=np.ones((2, 1)), b=np.ones((2, 2)), c=np.ones((2, 2)))


class TestReconstruct:
    def test_hand_outer_product(self):
        t = reconstruct(rank1_example())
        want = {
            (0, 0, 0): 2.0, (0, 1, 0): 6.0, (1, 0, 0): 4.0, (1, 1, 0): 12.0,
            (0, 0, 1): 1.0, (0, 1, 1): 3.0, (1, 0, 1): 2.0, (1, 1, 1): 6.0,
        }
        for idx, val in want.items():
            assert t[idx] == val

    def test_zero_time_factor_annihilates(self):
        f = FactorSet(rank=2, a=np.ones((3, 2)), b=np.ones((4, 2)), c=np.zeros((5, 2)))
        assert frobenius_norm(reconstruct(f)) == 0.0

    def test_zero_component_is_additive_identity(self):
        base = rank1_example()
        padded = FactorSet(
            rank=2,
            a=np.hstack([base.a, np.zeros((2, 1))]),
            b=np.hstack([base.b, np.zeros((2, 1))]),
            c=np.hstack([base.c, np.zeros((2, 1))]),
        )
        np.testing.assert_array_equal(reconstruct(padded).data, reconstruct(base).data)


class TestDecompose:
    def test_recovers_exact_rank1(self):
        t = reconstruct(rank1_example())
        _, trace = nncp_decompose(t, SolverConfig(rank=1, epsilon=1e-9, max_iters=500, seed=0))
        assert trace.rel_error < 1e-6

    def test_zero_tensor_collapses_first_sweep(self):
        t = Tensor3.zeros((3, 4, 5))
        factors, trace = nncp_decompose(t, SolverConfig(rank=2, epsilon=1e-9, max_iters=10, seed=1))
        assert trace.rel_error == 0.0
        assert frobenius_norm(reconstruct(factors)) == 0.0

    def test_recovers_random_rank3_fit(self):
        t = synthetic(np.random.default_rng(5), (10, 12, 8), 3)
        _, trace = nncp_decompose(t, SolverConfig(rank=3, epsilon=1e-8, max_iters=5000, seed=0))
        assert trace.rel_error < 1e-3

    def test_rejects_negative_input(self):
        data = np.ones((2, 2, 2))
        data[0, 0, 0] = -0.5
        with pytest.raises(ValueError):
            nncp_decompose(Tensor3(data), SolverConfig(rank=1))

    def test_factors_stay_nonnegative(self):
        t = synthetic(np.random.default_rng(6), (6, 7, 8), 2)
        factors, _ = nncp_decompose(t, SolverConfig(rank=2, epsilon=0, max_iters=50, seed=2))
        for m in (factors.a, factors.b, factors.c):
            assert (m >= 0).all()

    def test_objective_non_increasing(self):
        t = synthetic(np.random.default_rng(7), (8, 9, 10), 3)
        _, trace = nncp_decompose(
            t, SolverConfig(rank=3, epsilon=0, max_iters=300, seed=3, track_fit=True)
        )
        errs = trace.rel_errors
        assert len(errs) == trace.iterations
        assert all(errs[i + 1] <= errs[i] + 1e-10 for i in range(len(errs) - 1))

    def test_same_seed_bit_identical(self):
        t = synthetic(np.random.default_rng(8), (6, 5, 7), 2)
        cfg = SolverConfig(rank=2, epsilon=1e-6, max_iters=200, seed=11)
        f1, _ = nncp_decompose(t, cfg)
        f2, _ = nncp_decompose(t, cfg)
        for m1, m2 in zip((f1.a, f1.b, f1.c), (f2.a, f2.b, f2.c)):
            np.testing.assert_array_equal(m1, m2)

    def test_different_seeds_same_fit_on_exact_tensor(self):
        t = synthetic(np.random.default_rng(9), (6, 5, 7), 1)
        _, tr1 = nncp_decompose(t, SolverConfig(rank=1, epsilon=0, max_iters=800, seed=0))
        _, tr2 = nncp_decompose(t, SolverConfig(rank=1, epsilon=0, max_iters=800, seed=99))
        assert abs(tr1.rel_error - tr2.rel_error) < 1e-6

    def test_norm_difference_stop_fires(self):
        t = synthetic(np.random.default_rng(10), (10, 10, 10), 2)
        _, trace = nncp_decompose(t, SolverConfig(rank=2, epsilon=0.001, max_iters=10_000, seed=0))
        assert trace.converged
        assert trace.iterations < 10_000
        assert abs(trace.norms[-1] - trace.norms[-2]) <= 0.001
        assert len(trace.norms) == trace.iterations

    def test_unconverged_flag_when_budget_exhausted(self):
        t = synthetic(np.random.default_rng(11), (10, 10, 10), 3)
        _, trace = nncp_decompose(t, SolverConfig(rank=3, epsilon=1e-14, max_iters=5, seed=0))
        assert not trace.converged
        assert trace.iterations == 5


class TestExtractTimeFactor:
    def test_direct_projection(self):
        f = FactorSet(rank=1, a=np.ones((2, 1)), b=np.ones((2, 1)), c=np.array([[2.0], [4.0], [2.0]]))
        np.testing.assert_array_equal(extract_time_factor(f, 1), [2.0, 4.0, 2.0])

    def test_singleton_time_axis(self):
        f = FactorSet(rank=2, a=np.ones((2, 2)), b=np.ones((2, 2)), c=np.ones((1, 2)))
        assert extract_time_factor(f, 2).shape == (1,)

    def test_out_of_range(self):
        f = rank1_example()
        for r in (0, 2):
            with pytest.raises(ValueError):
                extract_time_factor(f, r)

    def test_recovered_direction_matches_up_to_scale(self):
        t = reconstruct(rank1_example())
        factors, _ = nncp_decompose(t, SolverConfig(rank=1, epsilon=1e-12, max_iters=2000, seed=4))
        got = extract_time_factor(factors, 1)
        want = np.array([2.0, 1.0])
        corr = got @ want / (np.linalg.norm(got) * np.linalg.norm(want))
        assert corr == pytest.approx(1.0, abs=1e-6)


class TestSerialization:
    def test_json_round_trip_exact(self):
        t = synthetic(np.random.default_rng(12), (5, 6, 7), 3)
        factors, _ = nncp_decompose(t, SolverConfig(rank=3, epsilon=0, max_iters=37, seed=5))
        text = factors_to_json(factors)
        back = factors_from_json(text)
        assert back.rank == factors.rank
        for m1, m2 in zip((factors.a, factors.b, factors.c), (back.a, back.b, back.c)):
            np.testing.assert_array_equal(m1, m2)

    def test_dims_consistency_check(self):
        doc = json.loads(factors_to_json(rank1_example()))
        doc["dims"] = [9, 9, 9]
        with pytest.raises(ValueError):
            factors_from_json(json.dumps(doc))


class TestSolverConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"rank": 0},
            {"epsilon": -1.0},
            {"max_iters": 0},
            {"denom_guard": 0.0},
        ],
    )
    def test_invalid_config(self, kwargs):
        with pytest.raises(ValueError):
            SolverConfig(**kwargs)

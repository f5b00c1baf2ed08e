import numpy as np
import pytest

from markov_abstraction import (
    DimensionError,
    GenSpec,
    ParameterError,
    gen_lowrank_transition,
    gen_stochastic_matrix,
    numerical_rank,
    sample_simplex_row,
    smooth_loss,
    validate_row_stochastic,
)


class TestSampleSimplexRow:
    def test_point_simplex(self, rng):
        for _ in range(5):
            assert np.array_equal(sample_simplex_row(1, rng), [1.0])

    def test_on_simplex(self, rng):
        for d in (2, 5, 50):
            x = sample_simplex_row(d, rng)
            assert np.all(x >= 0) and abs(x.sum() - 1) < 1e-12

    def test_mean_is_uniform(self):
        rng = np.random.default_rng(99)
        X = np.array([sample_simplex_row(4, rng) for _ in range(100_000)])
        assert np.allclose(X.mean(axis=0), 0.25, atol=0.005)
        # flat Dirichlet marginal: Beta(1, 3) has variance 3 / 80
        assert np.allclose(X.var(axis=0), 3 / 80, atol=0.002)

    def test_zero_dimension(self, rng):
        with pytest.raises(DimensionError):
            sample_simplex_row(0, rng)


class TestGenStochasticMatrix:
    def test_one_by_one(self):
        assert np.array_equal(gen_stochastic_matrix(1, 1, 0), [[1.0]])

    def test_valid(self):
        assert validate_row_stochastic(gen_stochastic_matrix(20, 20, 7), 1e-9)

    def test_deterministic(self):
        assert np.array_equal(gen_stochastic_matrix(20, 20, 7), gen_stochastic_matrix(20, 20, 7))
        assert not np.array_equal(gen_stochastic_matrix(20, 20, 7), gen_stochastic_matrix(20, 20, 8))

    def test_zero_dimension(self):
        with pytest.raises(DimensionError):
            gen_stochastic_matrix(0, 3, 0)


class TestGenLowrankTransition:
    def test_rank_25(self):
        P, F = gen_lowrank_transition(GenSpec(100, 25, 0))
        s = np.linalg.svd(P.entries, compute_uv=False)
        assert np.all(s[25:] < 1e-10)
        assert numerical_rank(P.entries) == 25

    def test_exact(self):
        P, F = gen_lowrank_transition(GenSpec(60, 8, 1))
        assert smooth_loss(P, F) <= 1e-18
        assert F.is_feasible(1e-9)

    def test_full_rank_when_k_equals_n(self):
        P, _ = gen_lowrank_transition(GenSpec(30, 30, 2))
        assert np.linalg.svd(P.entries, compute_uv=False).min() > 1e-12

    def test_k_above_n(self):
        with pytest.raises(ParameterError):
            GenSpec(5, 6, 0)

    def test_properties_over_draws(self):
        for seed in range(15):
            n, k = 30 + seed, 2 + seed % 7
            P, _ = gen_lowrank_transition(GenSpec(n, k, seed))
            assert validate_row_stochastic(P, 1e-9)
            assert numerical_rank(P.entries) <= k

    def test_deterministic_bytes(self):
        a, fa = gen_lowrank_transition(GenSpec(40, 5, 3))
        b, fb = gen_lowrank_transition(GenSpec(40, 5, 3))
        assert a.entries.tobytes() == b.entries.tobytes()
        assert fa.V.tobytes() == fb.V.tobytes()

"""Seeded generators for row-stochastic and low-rank transition matrices."""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, ParameterError
from .stochastic import Factorization, TransitionMatrix


def as_generator(seed):
    """``numpy.random.Generator`` from an int seed, a generator, or None."""
    return np.random.default_rng(seed)


def sample_simplex_row(d, rng=None):
    """Draw one point uniformly from the probability simplex of dimension ``d``.

    Uses ``d`` unit-rate exponential draws normalized by their sum.
    """
    if d < 1:
        raise DimensionError(f"simplex dimension must be >= 1, got {d}")
    e = as_generator(rng).standard_exponential(d)
    return e / e.sum()


def gen_stochastic_matrix(rows, cols, rng=None):
    """Matrix whose rows are independent uniform draws from the simplex."""
    if rows < 1 or cols < 1:
        raise DimensionError(f"matrix dimensions must be >= 1, got ({rows}, {cols})")
    E = as_generator(rng).standard_exponential((rows, cols))
    return E / E.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class GenSpec:
    n: int
    k: int
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise DimensionError(f"n must be >= 1, got {self.n}")
        if not 1 <= self.k <= self.n:
            raise ParameterError(f"k must satisfy 1 <= k <= n, got k={self.k}, n={self.n}")


def gen_lowrank_transition(spec):
    """Transition matrix ``P = A B C`` from three random stochastic factors.

    Returns
    -------
    P : TransitionMatrix
        n x n, rank at most ``spec.k``.
    factors : Factorization
        The generating triple ``(A, B, C)``.
    """
    rng = as_generator(spec.seed)
    A = gen_stochastic_matrix(spec.n, spec.k, rng)
    B = gen_stochastic_matrix(spec.k, spec.k, rng)
    C = gen_stochastic_matrix(spec.k, spec.n, rng)
    F = Factorization(A, B, C)
    P = A @ (B @ C)
    # renormalize away the last ulp of drift so P passes construction checks
    P /= P.sum(axis=1, keepdims=True)
    return TransitionMatrix(P), F


def numerical_rank(M, tol=1e-10):
    """Number of singular values of ``M`` above ``tol``."""
    s = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    return int(np.sum(s > tol))

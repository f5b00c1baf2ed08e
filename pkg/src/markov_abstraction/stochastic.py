"""Dense row-stochastic matrices, three-factor decompositions and their losses."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import DimensionError, ParameterError

CONSTRUCTION_TOL = 1e-9
PRODUCT_TOL = 1e-7


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _as_matrix(M, name="matrix"):
    if isinstance(M, TransitionMatrix):
        return M.entries
    a = np.asarray(M, dtype=float)
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    return a


def validate_row_stochastic(M, tol=CONSTRUCTION_TOL):
    """Return True iff ``M`` is entrywise >= -tol with every row summing to 1 +/- tol."""
    if tol <= 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    a = _as_matrix(M)
    if not np.all(np.isfinite(a)):
        return False
    return bool(np.all(a >= -tol) and np.all(np.abs(a.sum(axis=1) - 1.0) <= tol))


def first_invalid_row(M, tol=CONSTRUCTION_TOL):
    """Index of the first row violating row-stochasticity, or None."""
    a = _as_matrix(M)
    bad = (~np.isfinite(a)).any(axis=1) | (a < -tol).any(axis=1)
    bad |= ~(np.abs(a.sum(axis=1) - 1.0) <= tol)
    idx = np.flatnonzero(bad)
    return int(idx[0]) if idx.size else None


@dataclass(frozen=True)
class TransitionMatrix:
    """Transition matrix of a finite Markov chain, optionally with an initial distribution.

    Entries must lie in [0, 1] and every row must sum to one within ``1e-9``.
    The initial distribution plays no part in the factorization; it is only
    propagated by the evaluators.
    """

    entries: np.ndarray
    initial: Optional[np.ndarray] = None

    def __post_init__(self):
        P = _as_matrix(self.entries, "P")
        if P.shape[0] != P.shape[1]:
            raise DimensionError(f"transition matrix must be square, got {P.shape}")
        row = first_invalid_row(P, CONSTRUCTION_TOL)
        if row is not None or np.any(P > 1.0 + CONSTRUCTION_TOL):
            raise ParameterError(f"P is not row-stochastic (row {row})")
        object.__setattr__(self, "entries", _frozen(P))
        if self.initial is not None:
            mu = np.asarray(self.initial, dtype=float).ravel()
            if mu.shape != (P.shape[0],) or not validate_row_stochastic(mu[None, :]):
                raise ParameterError("initial distribution must be a probability vector of length n")
            object.__setattr__(self, "initial", _frozen(mu))

    @property
    def n(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True)
class Factorization:
    """Row-stochastic factors ``(U, Pk, V)`` with ``P ~ U @ Pk @ V``.

    ``U`` is n x k (states to meta states), ``Pk`` is the k x k kernel
    transition and ``V`` is k x n (meta states back to states).  Construction
    checks shapes only; call :meth:`is_feasible` for the simplex constraints,
    since intermediate iterates of some solvers need not be feasible.
    """

    U: np.ndarray
    Pk: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        U = _as_matrix(self.U, "U")
        Pk = _as_matrix(self.Pk, "Pk")
        V = _as_matrix(self.V, "V")
        n, k = U.shape
        if Pk.shape != (k, k) or V.shape != (k, n):
            raise DimensionError(
                f"inconsistent factor shapes U{U.shape}, Pk{Pk.shape}, V{V.shape}"
            )
        for name, a in (("U", U), ("Pk", Pk), ("V", V)):
            object.__setattr__(self, name, _frozen(a))

    @property
    def n(self):
        return self.U.shape[0]

    @property
    def k(self):
        return self.U.shape[1]

    def is_feasible(self, tol=CONSTRUCTION_TOL):
        return all(validate_row_stochastic(a, tol) for a in (self.U, self.Pk, self.V))


@dataclass(frozen=True)
class Objective:
    """Components of the regularized loss; ``total`` is their plain sum."""

    smooth_loss: float
    l1_u: float
    l1_v: float
    total: float


def reconstruct(F):
    """Return ``U @ Pk @ V``."""
    return F.U @ (F.Pk @ F.V)


def _check_conform(P, F):
    P = _as_matrix(P, "P")
    if P.shape != (F.n, F.n):
        raise DimensionError(f"P has shape {P.shape} but factors imply ({F.n}, {F.n})")
    return P


def smooth_loss(P, F):
    """Half the squared Frobenius norm of the residual ``P - U Pk V``."""
    P = _check_conform(P, F)
    R = P - reconstruct(F)
    return 0.5 * float(np.sum(R * R))


def objective(P, F, lambda_u=0.0, lambda_v=0.0):
    """Smooth loss plus entrywise l1 penalties on ``U`` and ``V``.

    For feasible factors ``||U||_1 = n`` and ``||V||_1 = k``, so the penalty
    terms are constant on the feasible set.
    """
    if lambda_u < 0 or lambda_v < 0:
        raise ParameterError(f"regularization weights must be >= 0, got {lambda_u}, {lambda_v}")
    f = smooth_loss(P, F)
    l1_u = lambda_u * float(np.abs(F.U).sum())
    l1_v = lambda_v * float(np.abs(F.V).sum())
    return Objective(f, l1_u, l1_v, f + l1_u + l1_v)


def matrix_power_mstep(P, m):
    """m-step transition matrix ``P**m`` by repeated multiplication.

    ``m = 0`` returns the identity.
    """
    P = _as_matrix(P, "P")
    if P.shape[0] != P.shape[1]:
        raise DimensionError(f"P must be square, got {P.shape}")
    m = int(m)
    if m < 0:
        raise ParameterError(f"m must be >= 0, got {m}")
    if m == 0:
        return np.eye(P.shape[0])
    out = P.copy()
    for _ in range(m - 1):
        out = out @ P
    return out

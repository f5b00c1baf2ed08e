"""Block coordinate gradient descent for ``P ~ U Pk V`` with row-stochastic factors.

Each iteration updates ``U``, then ``Pk``, then ``V``.  Every block takes a
gradient step on ``f = 0.5 ||P - U Pk V||_F^2``; ``U`` and ``V`` are then
soft-thresholded and projected row-wise onto the simplex, ``Pk`` is only
projected.
"""

import csv
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .exceptions import DimensionError, DivergenceError, ParameterError
from .matrix_io import format_float
from .simplex import project_rows, prox_rows
from .stochastic import Factorization, Objective, _as_matrix, objective
from .synthetic import gen_stochastic_matrix

STEP_POLICIES = ("constant", "adaptive")
TERMINATION_REASONS = ("max_iters", "factor_change_tol", "objective_change_tol", "zero_gradient")
TINY_DENOMINATOR = 1e-30
DIVERGENCE_FACTOR = 1e6

TRACE_HEADER = [
    "iter", "total", "smooth", "l1_u", "l1_v",
    "alpha", "beta", "gamma", "du", "dp", "dv", "elapsed_ms",
]


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters of a solver run.

    Parameters
    ----------
    k : int
        Kernel size (number of meta states), ``1 <= k <= n``.
    lambda_u, lambda_v : float
        Weights of the l1 penalties on ``U`` and ``V``.
    step_policy : {'adaptive', 'constant'}
        ``'adaptive'`` uses the exact-line-search style quotients scaled by
        ``c1, c2, c3``; ``'constant'`` uses ``alpha, beta, gamma``.
    alpha, beta, gamma : float
        Constant step sizes.
    c1, c2, c3 : float
        Adaptive step multipliers, each in (0, 2).
    max_iters : int
        Iteration cap.
    rel_tol : float
        Relative tolerance for both the factor-change and objective-change tests.
    seed : int
        Seed for the random feasible initialization.
    threshold_scaling : bool
        If True the threshold level is ``step * lambda`` instead of ``lambda / 2``.
    paper_literal_steps : bool
        If True, the ``Pk`` step uses ``||grad V||^2`` as numerator and the
        ``V`` step uses ``||grad Pk||^2`` (swapped numerators).  Default
        False uses each block's own gradient.
    """

    k: int
    lambda_u: float = 0.0
    lambda_v: float = 0.0
    step_policy: str = "adaptive"
    alpha: float = 0.2
    beta: float = 0.2
    gamma: float = 0.2
    c1: float = 1.0
    c2: float = 1.0
    c3: float = 1.0
    max_iters: int = 1000
    rel_tol: float = 1e-8
    seed: int = 0
    threshold_scaling: bool = False
    paper_literal_steps: bool = False

    def validate(self, n=None):
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ParameterError(f"kernel size k must be a positive integer, got {self.k}")
        if n is not None and self.k > n:
            raise ParameterError(f"kernel size k={self.k} exceeds the number of states n={n}")
        if self.lambda_u < 0 or self.lambda_v < 0:
            raise ParameterError("lambda_u and lambda_v must be >= 0")
        if self.step_policy not in STEP_POLICIES:
            raise ParameterError(f"step_policy must be one of {STEP_POLICIES}, got {self.step_policy!r}")
        if self.step_policy == "adaptive":
            for name in ("c1", "c2", "c3"):
                c = getattr(self, name)
                if not 0 < c < 2:
                    raise ParameterError(f"{name} must lie in (0, 2), got {c}")
        else:
            for name in ("alpha", "beta", "gamma"):
                if not getattr(self, name) > 0:
                    raise ParameterError(f"{name} must be > 0, got {getattr(self, name)}")
        if int(self.max_iters) < 1:
            raise ParameterError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.rel_tol > 0:
            raise ParameterError(f"rel_tol must be > 0, got {self.rel_tol}")
        return self


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    objective: Objective
    alpha: float
    beta: float
    gamma: float
    du: float
    dp: float
    dv: float
    elapsed_ms: float
    skipped: tuple = (False, False, False)
    # smooth loss before the U block and after each of the three block updates
    block_losses: tuple = ()


@dataclass
class SolverTrace:
    """Per-iteration history of a run."""

    initial: Optional[Objective] = None
    records: List[IterationRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def column(self, name):
        """Values of one trace column as an array, e.g. ``column('smooth')``."""
        if name in ("total", "smooth", "l1_u", "l1_v"):
            attr = "smooth_loss" if name == "smooth" else name
            return np.array([getattr(r.objective, attr) for r in self.records])
        return np.array([getattr(r, name) for r in self.records])

    def rows(self):
        for r in self.records:
            o = r.objective
            yield [r.iter, o.total, o.smooth_loss, o.l1_u, o.l1_v,
                   r.alpha, r.beta, r.gamma, r.du, r.dp, r.dv, r.elapsed_ms]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_HEADER)
            for row in self.rows():
                w.writerow([row[0]] + [format_float(v) for v in row[1:]])


@dataclass
class SolverResult:
    factorization: Factorization
    trace: SolverTrace
    termination_reason: str

    @property
    def n_iter(self):
        return len(self.trace)


def _residual(P, U, Pk, V):
    return P - U @ (Pk @ V)


def _conform(P, U, Pk, V):
    P = _as_matrix(P, "P")
    U, Pk, V = (np.asarray(a, dtype=float) for a in (U, Pk, V))
    n, k = U.shape
    if P.shape != (n, n) or Pk.shape != (k, k) or V.shape != (k, n):
        raise DimensionError(
            f"shapes do not conform: P{P.shape}, U{U.shape}, Pk{Pk.shape}, V{V.shape}"
        )
    return P, U, Pk, V


def grad_u(P, U, Pk, V):
    """Gradient of the smooth loss in ``U``: ``-(P - U Pk V) V^T Pk^T``."""
    P, U, Pk, V = _conform(P, U, Pk, V)
    return -(_residual(P, U, Pk, V) @ V.T) @ Pk.T


def grad_p(P, U, Pk, V):
    """Gradient of the smooth loss in ``Pk``: ``-U^T (P - U Pk V) V^T``."""
    P, U, Pk, V = _conform(P, U, Pk, V)
    return -U.T @ (_residual(P, U, Pk, V) @ V.T)


def grad_v(P, U, Pk, V):
    """Gradient of the smooth loss in ``V``: ``-Pk^T U^T (P - U Pk V)``."""
    P, U, Pk, V = _conform(P, U, Pk, V)
    return -Pk.T @ (U.T @ _residual(P, U, Pk, V))


def _quotient(c, numerator, direction_image):
    den = float(np.sum(direction_image * direction_image))
    if den < TINY_DENOMINATOR:
        return None
    return c * float(np.sum(numerator * numerator)) / den


def adaptive_step_u(grad_U, Pk, V, c1=1.0, numerator=None):
    """``c1 ||G||^2 / ||G Pk V||^2``, or None when the denominator vanishes.

    ``numerator`` substitutes a different gradient in the numerator.
    """
    G = np.asarray(grad_U, dtype=float)
    return _quotient(c1, G if numerator is None else numerator, G @ (Pk @ V))


def adaptive_step_p(grad_P, U, V, c2=1.0, numerator=None):
    """``c2 ||G||^2 / ||U G V||^2``, or None when the denominator vanishes."""
    G = np.asarray(grad_P, dtype=float)
    return _quotient(c2, G if numerator is None else numerator, U @ (G @ V))


def adaptive_step_v(grad_V, U, Pk, c3=1.0, numerator=None):
    """``c3 ||G||^2 / ||U Pk G||^2``, or None when the denominator vanishes."""
    G = np.asarray(grad_V, dtype=float)
    return _quotient(c3, G if numerator is None else numerator, (U @ Pk) @ G)


@dataclass(frozen=True)
class StepOutcome:
    U: np.ndarray
    Pk: np.ndarray
    V: np.ndarray
    alpha: float
    beta: float
    gamma: float
    skipped: tuple
    block_losses: tuple


def _check_finite(X, iteration, what):
    if not np.all(np.isfinite(X)):
        raise DivergenceError(iteration, f"non-finite {what} at iteration {iteration}")


def _threshold_level(lam, step, config):
    return step * lam if config.threshold_scaling else lam / 2.0


def step(P, U, Pk, V, config, iteration=0):
    """Run one full U -> Pk -> V sweep and return the new factors.

    Adaptive steps whose denominator is below ``1e-30`` skip their block; the
    skipped flags and the steps actually used are part of the outcome.  Raises
    :class:`DivergenceError` when an intermediate becomes non-finite.
    """
    P, U, Pk, V = _conform(P, U, Pk, V)
    adaptive = config.step_policy == "adaptive"
    literal = adaptive and config.paper_literal_steps
    skipped = [False, False, False]

    # U block
    R = _residual(P, U, Pk, V)
    f0 = 0.5 * float(np.sum(R * R))
    RVt = R @ V.T
    gU = -RVt @ Pk.T
    if adaptive:
        alpha = adaptive_step_u(gU, Pk, V, config.c1)
    else:
        alpha = config.alpha
    if alpha is None:
        skipped[0] = True
        alpha = 0.0
        U_new = U
    else:
        half = U - alpha * gU
        _check_finite(half, iteration, "U half-step")
        U_new = prox_rows(half, _threshold_level(config.lambda_u, alpha, config))

    # Pk block, with the fresh U
    R = _residual(P, U_new, Pk, V)
    f1 = 0.5 * float(np.sum(R * R))
    gP = -U_new.T @ (R @ V.T)
    if adaptive:
        num = None
        if literal:
            num = -(Pk.T @ (U_new.T @ R))
        beta = adaptive_step_p(gP, U_new, V, config.c2, numerator=num)
    else:
        beta = config.beta
    if beta is None:
        skipped[1] = True
        beta = 0.0
        Pk_new = Pk
    else:
        half = Pk - beta * gP
        _check_finite(half, iteration, "Pk half-step")
        Pk_new = project_rows(half)

    # V block, with the fresh U and Pk
    UPk = U_new @ Pk_new
    R = P - UPk @ V
    f2 = 0.5 * float(np.sum(R * R))
    gV = -UPk.T @ R
    if adaptive:
        num = gP if literal else None
        gamma = adaptive_step_v(gV, U_new, Pk_new, config.c3, numerator=num)
    else:
        gamma = config.gamma
    if gamma is None:
        skipped[2] = True
        gamma = 0.0
        V_new = V
    else:
        half = V - gamma * gV
        _check_finite(half, iteration, "V half-step")
        V_new = prox_rows(half, _threshold_level(config.lambda_v, gamma, config))

    R = P - UPk @ V_new
    f3 = 0.5 * float(np.sum(R * R))
    if not np.isfinite(f3):
        raise DivergenceError(iteration)
    return StepOutcome(U_new, Pk_new, V_new, alpha, beta, gamma, tuple(skipped), (f0, f1, f2, f3))


# keeps the initialization stream distinct from the chain generator's for equal seeds
_INIT_STREAM = 0x1A17


def initial_factors(n, k, seed):
    """Feasible random start: U, then Pk, then V, rows uniform on their simplices."""
    rng = np.random.default_rng([_INIT_STREAM, int(seed)])
    U = gen_stochastic_matrix(n, k, rng)
    Pk = gen_stochastic_matrix(k, k, rng)
    V = gen_stochastic_matrix(k, n, rng)
    return U, Pk, V


def _rel_change(new, old):
    den = np.linalg.norm(old)
    diff = np.linalg.norm(new - old)
    if den == 0:
        return 0.0 if diff == 0 else np.inf
    return float(diff / den)


def run(P, config, init=None, callback=None):
    """Factorize ``P`` by block coordinate gradient descent.

    Parameters
    ----------
    P : array-like of shape (n, n) or TransitionMatrix
        Row-stochastic transition matrix.
    config : SolverConfig
    init : Factorization, optional
        Starting point; defaults to a seeded random feasible start.
    callback : callable, optional
        Called as ``callback(record, U, Pk, V)`` after every iteration.

    Returns
    -------
    SolverResult

    Raises
    ------
    DivergenceError
        If values become non-finite or the objective exceeds ``1e6`` times
        its initial value.
    """
    P = _as_matrix(P, "P")
    if P.shape[0] != P.shape[1]:
        raise DimensionError(f"P must be square, got {P.shape}")
    n = P.shape[0]
    config.validate(n)
    if init is None:
        U, Pk, V = initial_factors(n, config.k, config.seed)
    else:
        if init.n != n or init.k != config.k:
            raise DimensionError("initial factorization does not match P and k")
        U, Pk, V = (np.array(a) for a in (init.U, init.Pk, init.V))

    lu, lv = config.lambda_u, config.lambda_v
    obj = objective(P, Factorization(U, Pk, V), lu, lv)
    trace = SolverTrace(initial=obj)
    ceiling = DIVERGENCE_FACTOR * max(obj.total, np.finfo(float).tiny)
    reason = "max_iters"
    start = time.perf_counter()

    for t in range(int(config.max_iters)):
        try:
            out = step(P, U, Pk, V, config, iteration=t)
        except DivergenceError as err:
            err.trace = trace
            raise
        smooth = out.block_losses[-1]
        l1_u = lu * float(np.abs(out.U).sum())
        l1_v = lv * float(np.abs(out.V).sum())
        new_obj = Objective(smooth, l1_u, l1_v, smooth + l1_u + l1_v)
        if not np.isfinite(new_obj.total) or new_obj.total > ceiling:
            err = DivergenceError(t, f"objective {new_obj.total:.3e} exploded at iteration {t}")
            err.trace = trace
            raise err
        du = _rel_change(out.U, U)
        dp = _rel_change(out.Pk, Pk)
        dv = _rel_change(out.V, V)
        rec = IterationRecord(
            iter=t, objective=new_obj, alpha=out.alpha, beta=out.beta, gamma=out.gamma,
            du=du, dp=dp, dv=dv,
            elapsed_ms=(time.perf_counter() - start) * 1e3,
            skipped=out.skipped, block_losses=out.block_losses,
        )
        trace.records.append(rec)
        U, Pk, V = out.U, out.Pk, out.V
        if callback is not None:
            callback(rec, U, Pk, V)

        if all(out.skipped):
            reason = "zero_gradient"
            break
        if max(du, dp, dv) < config.rel_tol:
            reason = "factor_change_tol"
            break
        obj_change = abs(new_obj.total - obj.total) / max(abs(obj.total), np.finfo(float).tiny)
        if obj_change < config.rel_tol:
            reason = "objective_change_tol"
            break
        obj = new_obj

    return SolverResult(Factorization(U, Pk, V), trace, reason)


"""Fast m-step transitions through the kernel chain and abstraction quality metrics."""

import csv
import time
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .exceptions import ParameterError
from .matrix_io import format_float
from .stochastic import (
    Factorization,
    _as_matrix,
    _check_conform,
    matrix_power_mstep,
    reconstruct,
    validate_row_stochastic,
)

SPARSITY_TOL = 1e-6
KERNEL_TOL = 1e-8
EVAL_HEADER = ["approx_error", "nnz_u", "nnz_v", "mstep_m", "mstep_err", "exact_ms", "kernel_ms"]


@dataclass(frozen=True)
class KernelChain:
    """A factorization together with its cached k x k chain ``K = V U Pk``."""

    factorization: Factorization
    K: np.ndarray

    @property
    def k(self):
        return self.K.shape[0]


def build_kernel_chain(F, tol=KERNEL_TOL):
    K = F.V @ F.U @ F.Pk
    if not validate_row_stochastic(K, tol):
        raise ParameterError("V U Pk is not row-stochastic; the factorization is infeasible")
    K.setflags(write=False)
    return KernelChain(F, K)


def _check_m(m):
    m = int(m)
    if m < 1:
        raise ParameterError(f"m must be >= 1 for the kernel path, got {m}")
    return m


def kernel_power(chain, m):
    """``Pk K^(m-1)`` using k x k products only."""
    m = _check_m(m)
    M = chain.factorization.Pk
    K = chain.K
    for _ in range(m - 1):
        M = M @ K
    return M


def kernel_mstep(chain, m):
    """m-step transition matrix ``U Pk K^(m-1) V`` (n x n)."""
    F = chain.factorization
    return F.U @ (kernel_power(chain, m) @ F.V)


def kernel_propagate(chain, mu, m):
    """Push distributions ``mu`` (rows over states) forward ``m`` steps through the kernel."""
    F = chain.factorization
    mu = np.asarray(mu, dtype=float)
    return ((mu @ F.U) @ kernel_power(chain, m)) @ F.V


def mstep_error(P, chain, m):
    """Largest absolute entrywise gap between ``P^m`` and the kernel m-step matrix."""
    P = _check_conform(P, chain.factorization)
    return float(np.max(np.abs(matrix_power_mstep(P, m) - kernel_mstep(chain, m))))


def sparsity_stats(F, tol=SPARSITY_TOL):
    """Mean number of entries above ``tol`` per row of ``U`` and of ``V``."""
    if tol <= 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    nnz_u = float(np.mean(np.sum(F.U > tol, axis=1)))
    nnz_v = float(np.mean(np.sum(F.V > tol, axis=1)))
    return nnz_u, nnz_v


def approx_error(P, F):
    """Squared Frobenius norm ``||P - U Pk V||_F^2``."""
    P = _check_conform(P, F)
    R = P - reconstruct(F)
    return float(np.sum(R * R))


@dataclass
class EvalReport:
    approx_error: float
    nnz_u_mean: float
    nnz_v_mean: float
    mstep_errors: List[Tuple[int, float]] = field(default_factory=list)
    # (m, exact_ms, kernel_ms)
    timing: List[Tuple[int, float, float]] = field(default_factory=list)

    def rows(self):
        times = {m: (e, k) for m, e, k in self.timing}
        base = [self.approx_error, self.nnz_u_mean, self.nnz_v_mean]
        if not self.mstep_errors:
            yield base + [None, None, None, None]
        for m, err in self.mstep_errors:
            exact_ms, kernel_ms = times.get(m, (float("nan"), float("nan")))
            yield base + [m, err, exact_ms, kernel_ms]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(EVAL_HEADER)
            for row in self.rows():
                w.writerow(
                    ["" if v is None else (str(v) if isinstance(v, int) else format_float(v))
                     for v in row]
                )


def _timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, (time.perf_counter() - t0) * 1e3


def evaluate(P, F, msteps=(1, 5, 10), tol=SPARSITY_TOL):
    """Reconstruction error, sparsity and m-step accuracy/timing of an abstraction."""
    P = _check_conform(_as_matrix(P, "P"), F)
    nnz_u, nnz_v = sparsity_stats(F, tol)
    report = EvalReport(approx_error(P, F), nnz_u, nnz_v)
    if msteps:
        chain = build_kernel_chain(F)
        for m in msteps:
            m = _check_m(m)
            exact, exact_ms = _timed(matrix_power_mstep, P, m)
            approx, kernel_ms = _timed(kernel_mstep, chain, m)
            report.mstep_errors.append((m, float(np.max(np.abs(exact - approx)))))
            report.timing.append((m, exact_ms, kernel_ms))
    return report

"""Seed-replicated sweeps over kernel size, regularization and step size."""

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .evaluation import EvalReport, evaluate
from .exceptions import DivergenceError, ParameterError
from .matrix_io import format_float
from .solver import SolverConfig, SolverTrace, run
from .stochastic import Factorization
from .synthetic import GenSpec, gen_lowrank_transition

RESULTS_HEADER = [
    "kernel_size", "lambda", "step_policy", "step", "instance", "approx_error",
    "nnz_u", "nnz_v", "iters", "term_reason", "total_ms", "per_iter_ms", "diverged",
]
AGG_HEADER = [
    "kernel_size", "lambda", "step_policy", "step", "mean_error", "std_error",
    "mean_ms", "std_ms", "mean_iters", "n_diverged",
]


@dataclass(frozen=True)
class SweepSpec:
    """Grid definition.

    ``steps`` holds the constant step (alpha = beta = gamma) for the
    ``'constant'`` policy and the multiplier (c1 = c2 = c3) for ``'adaptive'``.
    Regularization is symmetric: lambda_u = lambda_v = lambda.
    """

    n: int = 100
    true_rank: int = 25
    kernel_sizes: Sequence[int] = (5, 10, 15, 20, 25, 30, 35, 40)
    lambdas: Sequence[float] = (0.0, 0.001, 0.005, 0.01)
    step_policy: str = "adaptive"
    steps: Sequence[float] = (1.0,)
    instances: int = 10
    base_seed: int = 0
    max_iters: int = 1000
    rel_tol: float = 1e-8

    def validate(self):
        for name in ("kernel_sizes", "lambdas", "steps"):
            if len(getattr(self, name)) == 0:
                raise ParameterError(f"{name} must be non-empty")
        if self.instances < 1:
            raise ParameterError(f"instances must be >= 1, got {self.instances}")
        GenSpec(self.n, self.true_rank, self.base_seed)
        for k in self.kernel_sizes:
            self.config(k, 0.0, self.steps[0], 0).validate(self.n)
        for lam in self.lambdas:
            if lam < 0:
                raise ParameterError(f"lambda must be >= 0, got {lam}")
        for s in self.steps:
            self.config(self.kernel_sizes[0], 0.0, s, 0).validate(self.n)
        return self

    def config(self, k, lam, step, seed):
        cfg = SolverConfig(
            k=int(k), lambda_u=lam, lambda_v=lam, step_policy=self.step_policy,
            max_iters=self.max_iters, rel_tol=self.rel_tol, seed=seed,
        )
        if self.step_policy == "constant":
            return replace(cfg, alpha=step, beta=step, gamma=step)
        return replace(cfg, c1=step, c2=step, c3=step)


@dataclass(frozen=True)
class InstanceResult:
    """Outcome of one solve; ``report`` and ``factorization`` are None when it diverged."""

    report: Optional[EvalReport]
    trace: SolverTrace
    termination_reason: str
    diverged: bool
    total_ms: float
    factorization: Optional[Factorization] = None

    @property
    def iters(self):
        return len(self.trace)


@dataclass(frozen=True)
class RunRecord:
    kernel_size: int
    lam: float
    step_policy: str
    step: float
    instance: int
    approx_error: float
    nnz_u: float
    nnz_v: float
    iters: int
    term_reason: str
    total_ms: float
    per_iter_ms: float
    diverged: bool

    def row(self):
        return [
            self.kernel_size, format_float(self.lam), self.step_policy, format_float(self.step),
            self.instance, format_float(self.approx_error), format_float(self.nnz_u),
            format_float(self.nnz_v), self.iters, self.term_reason,
            format_float(self.total_ms), format_float(self.per_iter_ms), int(self.diverged),
        ]


@dataclass(frozen=True)
class CellSummary:
    kernel_size: int
    lam: float
    step_policy: str
    step: float
    mean_error: float
    std_error: float
    mean_ms: float
    std_ms: float
    mean_iters: float
    n_diverged: int
    n_records: int

    def row(self):
        return [
            self.kernel_size, format_float(self.lam), self.step_policy, format_float(self.step),
            format_float(self.mean_error), format_float(self.std_error),
            format_float(self.mean_ms), format_float(self.std_ms),
            format_float(self.mean_iters), self.n_diverged,
        ]


@dataclass
class SweepResult:
    spec: SweepSpec
    records: List[RunRecord] = field(default_factory=list)
    cells: List[CellSummary] = field(default_factory=list)

    def cell(self, kernel_size, lam, step=None):
        for c in self.cells:
            if c.kernel_size == kernel_size and c.lam == lam and (step is None or c.step == step):
                return c
        raise KeyError((kernel_size, lam, step))

    def to_csv(self, prefix):
        """Write ``<prefix>.csv`` (one row per record) and ``<prefix>.agg.csv``."""
        paths = (f"{prefix}.csv", f"{prefix}.agg.csv")
        with open(paths[0], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RESULTS_HEADER)
            w.writerows(r.row() for r in self.records)
        with open(paths[1], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(AGG_HEADER)
            w.writerows(c.row() for c in self.cells)
        return paths


def run_instance(P, config, msteps=()):
    """Solve and evaluate once; divergence is returned as an outcome, not raised."""
    t0 = time.perf_counter()
    try:
        result = run(P, config)
    except DivergenceError as err:
        total_ms = (time.perf_counter() - t0) * 1e3
        return InstanceResult(None, err.trace or SolverTrace(), "diverged", True, total_ms)
    total_ms = (time.perf_counter() - t0) * 1e3
    report = evaluate(P, result.factorization, msteps=msteps)
    return InstanceResult(report, result.trace, result.termination_reason, False, total_ms,
                          result.factorization)


def _to_record(cell, instance, outcome):
    k, lam, s, policy = cell
    iters = outcome.iters
    per_iter = outcome.total_ms / iters if iters else float("nan")
    if outcome.diverged:
        err = nnz_u = nnz_v = float("nan")
    else:
        rep = outcome.report
        err, nnz_u, nnz_v = rep.approx_error, rep.nnz_u_mean, rep.nnz_v_mean
    return RunRecord(k, lam, policy, s, instance, err, nnz_u, nnz_v, iters,
                     outcome.termination_reason, outcome.total_ms, per_iter, outcome.diverged)


def sweep(spec, threads=1, progress=None):
    """Run every grid cell on every instance and aggregate per cell.

    Instance ``i`` uses seed ``base_seed + i`` for its chain and for the
    solver start, and reuses that chain in every cell, so cells are paired.  Records are ordered by
    (instance, kernel size, lambda, step) regardless of ``threads``.
    """
    spec.validate()
    cells = [(int(k), float(lam), float(s), spec.step_policy)
             for k in spec.kernel_sizes for lam in spec.lambdas for s in spec.steps]
    jobs = []
    for i in range(spec.instances):
        seed = spec.base_seed + i
        P = gen_lowrank_transition(GenSpec(spec.n, spec.true_rank, seed))[0].entries
        for cell in cells:
            jobs.append((P, cell, i, seed))

    def work(job):
        P, cell, i, seed = job
        outcome = run_instance(P, spec.config(cell[0], cell[1], cell[2], seed))
        if progress is not None:
            progress(cell, i, outcome)
        return _to_record(cell, i, outcome)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(work, jobs))
    else:
        records = [work(j) for j in jobs]
    return SweepResult(spec, records, aggregate(records))


def aggregate(records):
    """Per-cell mean and population std of error, time and iterations.

    Diverged records are counted but excluded from the statistics.
    """
    if len(records) == 0:
        raise ParameterError("cannot aggregate an empty set of records")
    groups = {}
    for r in records:
        groups.setdefault((r.kernel_size, r.lam, r.step_policy, r.step), []).append(r)
    out = []
    for (k, lam, policy, s), rs in groups.items():
        ok = [r for r in rs if not r.diverged]
        if ok:
            err = np.array([r.approx_error for r in ok])
            ms = np.array([r.total_ms for r in ok])
            it = np.array([r.iters for r in ok], dtype=float)
            stats = (err.mean(), err.std(), ms.mean(), ms.std(), it.mean())
        else:
            stats = (float("nan"),) * 5
        out.append(CellSummary(k, lam, policy, s, *map(float, stats),
                               n_diverged=len(rs) - len(ok), n_records=len(rs)))
    return out

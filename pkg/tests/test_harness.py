import csv

import numpy as np
import pytest

from markov_abstraction import (
    GenSpec,
    ParameterError,
    SolverConfig,
    SweepSpec,
    aggregate,
    gen_lowrank_transition,
    run_instance,
    sweep,
)
from markov_abstraction.harness import AGG_HEADER, RESULTS_HEADER, RunRecord
from oracles import two_pass_mean_std


def record(err, ms=1.0, iters=10, diverged=False, k=5, lam=0.0):
    return RunRecord(k, lam, "adaptive", 1.0, 0, err, 1.0, 1.0, iters, "max_iters",
                     ms, ms / iters, diverged)


class TestAggregate:
    def test_identical(self):
        (cell,) = aggregate([record(0.3)] * 4)
        assert cell.std_error == 0.0 and cell.mean_error == pytest.approx(0.3, rel=1e-15)

    def test_two_values(self):
        (cell,) = aggregate([record(1.0), record(3.0)])
        assert cell.mean_error == 2.0 and cell.std_error == 1.0

    def test_two_pass_oracle(self, rng):
        errs = rng.exponential(size=10)
        ms = rng.uniform(5, 50, size=10)
        (cell,) = aggregate([record(e, m, int(i)) for e, m, i in zip(errs, ms, rng.integers(1, 999, 10))])
        mean, std = two_pass_mean_std(errs)
        assert abs(cell.mean_error - mean) < 1e-12 and abs(cell.std_error - std) < 1e-12
        mean, std = two_pass_mean_std(ms)
        assert abs(cell.mean_ms - mean) < 1e-12 and abs(cell.std_ms - std) < 1e-12

    def test_diverged_excluded(self):
        (cell,) = aggregate([record(1.0), record(np.nan, diverged=True), record(3.0)])
        assert cell.mean_error == 2.0 and cell.n_diverged == 1 and cell.n_records == 3

    def test_grouping(self):
        cells = aggregate([record(1.0, k=5), record(2.0, k=10), record(3.0, k=5)])
        assert [(c.kernel_size, c.mean_error) for c in cells] == [(5, 2.0), (10, 2.0)]

    def test_empty(self):
        with pytest.raises(ParameterError):
            aggregate([])


class TestRunInstance:
    def test_small_error_at_true_rank(self):
        P, _ = gen_lowrank_transition(GenSpec(40, 5, 0))
        out = run_instance(P.entries, SolverConfig(k=5, seed=0))
        assert not out.diverged
        assert out.report.approx_error < 1e-3 * np.sum(P.entries ** 2)

    def test_regularized_reason_recorded(self):
        P, _ = gen_lowrank_transition(GenSpec(40, 5, 0))
        out = run_instance(P.entries, SolverConfig(k=5, lambda_u=0.01, lambda_v=0.01))
        assert out.termination_reason in ("max_iters", "factor_change_tol", "objective_change_tol")
        assert out.iters == len(out.trace) <= 1000

    def test_deterministic(self):
        P, _ = gen_lowrank_transition(GenSpec(30, 4, 1))
        cfg = SolverConfig(k=4, max_iters=100, seed=5)
        a, b = run_instance(P.entries, cfg), run_instance(P.entries, cfg)
        assert a.report.approx_error == b.report.approx_error
        assert a.iters == b.iters and a.termination_reason == b.termination_reason

    def test_divergence_is_an_outcome(self):
        P, _ = gen_lowrank_transition(GenSpec(10, 2, 1))
        cfg = SolverConfig(k=2, step_policy="constant", alpha=np.inf, beta=np.inf, gamma=np.inf)
        out = run_instance(P.entries, cfg)
        assert out.diverged and out.report is None and out.termination_reason == "diverged"


class TestSweep:
    def test_single_record(self):
        spec = SweepSpec(n=20, true_rank=3, kernel_sizes=(3,), lambdas=(0.0,), instances=1,
                         max_iters=20)
        res = sweep(spec)
        assert len(res.records) == 1 and len(res.cells) == 1

    def test_record_count_and_pairing(self):
        spec = SweepSpec(n=20, true_rank=3, kernel_sizes=(2, 4), lambdas=(0.0, 0.01),
                         step_policy="constant", steps=(0.02, 0.2), instances=3, max_iters=15)
        res = sweep(spec)
        assert len(res.records) == 2 * 2 * 2 * 3
        assert len(res.cells) == 8
        assert all(c.n_records == 3 for c in res.cells)
        keys = {(r.kernel_size, r.lam, r.step, r.instance) for r in res.records}
        assert len(keys) == 24

    def test_threads_do_not_change_results(self):
        spec = SweepSpec(n=20, true_rank=3, kernel_sizes=(2, 3, 4), lambdas=(0.0, 0.005),
                         instances=2, max_iters=30)
        a, b = sweep(spec, threads=1), sweep(spec, threads=3)
        strip = lambda rs: [(r.kernel_size, r.lam, r.instance, r.approx_error, r.iters) for r in rs]
        assert strip(a.records) == strip(b.records)

    def test_same_chain_in_every_cell(self):
        seen = {}

        def progress(cell, instance, outcome):
            seen.setdefault(instance, []).append(cell)

        spec = SweepSpec(n=15, true_rank=3, kernel_sizes=(2, 3), lambdas=(0.0,), instances=2,
                         max_iters=5)
        sweep(spec, progress=progress)
        assert sorted(seen) == [0, 1]
        P1 = gen_lowrank_transition(GenSpec(15, 3, spec.base_seed + 1))[0].entries
        P2 = gen_lowrank_transition(GenSpec(15, 3, spec.base_seed + 1))[0].entries
        assert P1.tobytes() == P2.tobytes()

    @pytest.mark.parametrize("kwargs", [
        dict(kernel_sizes=()), dict(lambdas=()), dict(instances=0), dict(lambdas=(-0.1,)),
        dict(kernel_sizes=(0,)), dict(kernel_sizes=(30,)), dict(steps=(2.5,)),
    ])
    def test_invalid_spec(self, kwargs):
        with pytest.raises(ParameterError):
            sweep(SweepSpec(n=20, true_rank=3, max_iters=5, **{"kernel_sizes": (3,), **kwargs}))

    def test_csv_files(self, tmp_path):
        spec = SweepSpec(n=15, true_rank=3, kernel_sizes=(2, 3), lambdas=(0.0, 0.01),
                         instances=2, max_iters=10)
        res = sweep(spec)
        rpath, apath = res.to_csv(tmp_path / "out")
        assert rpath.endswith("out.csv") and apath.endswith("out.agg.csv")
        with open(rpath) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == RESULTS_HEADER and len(rows) == 1 + len(res.records)
        with open(apath) as fh:
            agg = list(csv.reader(fh))
        assert agg[0] == AGG_HEADER and len(agg) == 1 + 4
        assert float(rows[1][5]) == res.records[0].approx_error

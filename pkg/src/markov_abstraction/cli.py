"""Command-line interface: generate, decompose, evaluate, sweep."""

import argparse
import sys

from .evaluation import evaluate
from .exceptions import DimensionError, DivergenceError, FormatError, ParameterError
from .harness import SweepSpec, sweep
from .matrix_io import load_matrix, store_matrix
from .solver import SolverConfig, run
from .stochastic import Factorization, first_invalid_row
from .synthetic import GenSpec, gen_lowrank_transition

INPUT_TOL = 1e-6


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are validation errors: one line, exit status 1
    def error(self, message):
        self.exit(1, f"error: {self.prog}: {message}\n")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser():
    parser = _Parser(
        prog="markov-abstraction",
        description="Low-dimensional stochastic abstractions of Markov chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random low-rank transition matrix")
    g.add_argument("--states", type=int, required=True)
    g.add_argument("--rank", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--out-factors", metavar="PREFIX")

    d = sub.add_parser("decompose", help="factorize a transition matrix")
    d.add_argument("--input", required=True)
    d.add_argument("--kernel-size", type=int, required=True)
    d.add_argument("--policy", choices=("adaptive", "constant"), required=True)
    d.add_argument("--c", type=float, default=1.0, help="adaptive step multiplier (all blocks)")
    d.add_argument("--alpha", type=float, default=0.2)
    d.add_argument("--beta", type=float, default=0.2)
    d.add_argument("--gamma", type=float, default=0.2)
    d.add_argument("--lambda", dest="lam", type=float, default=0.0)
    d.add_argument("--lambda-u", type=float)
    d.add_argument("--lambda-v", type=float)
    d.add_argument("--max-iters", type=int, required=True)
    d.add_argument("--tol", type=float, required=True)
    d.add_argument("--seed", type=int, required=True)
    d.add_argument("--out-prefix", required=True)
    d.add_argument("--paper-literal-steps", action="store_true")
    d.add_argument("--threshold-scaling", action="store_true")

    e = sub.add_parser("evaluate", help="score a factorization against its chain")
    e.add_argument("--input", required=True)
    e.add_argument("--factors", required=True, metavar="PREFIX")
    e.add_argument("--msteps", type=_int_list, default=[1, 5, 10])
    e.add_argument("--out", required=True)

    s = sub.add_parser("sweep", help="seed-replicated grid experiment")
    s.add_argument("--states", type=int, required=True)
    s.add_argument("--rank", type=int, required=True)
    s.add_argument("--kernel-sizes", type=_int_list, required=True)
    s.add_argument("--lambdas", type=_float_list, required=True)
    s.add_argument("--policy", choices=("adaptive", "constant"), default="adaptive")
    s.add_argument("--steps", type=_float_list,
                   help="constant step sizes, or adaptive multipliers (default 1.0)")
    s.add_argument("--c", type=float, help="adaptive multiplier (shorthand for --steps C)")
    s.add_argument("--instances", type=int, default=10)
    s.add_argument("--base-seed", type=int, default=0)
    s.add_argument("--max-iters", type=int, required=True)
    s.add_argument("--tol", type=float, required=True)
    s.add_argument("--out", required=True, metavar="PREFIX")
    s.add_argument("--threads", type=int, default=1)
    return parser


def _load_chain(path):
    P = load_matrix(path)
    if P.shape[0] != P.shape[1]:
        raise CliError(f"{path}: transition matrix must be square, got {P.shape[0]}x{P.shape[1]}")
    row = first_invalid_row(P, INPUT_TOL)
    if row is not None:
        raise CliError(f"{path}: row {row + 1} is not a probability distribution "
                       f"(sum {P[row].sum():.12g}, min {P[row].min():.12g})")
    return P


def _factor_paths(prefix):
    return {name: f"{prefix}.{name}.csv" for name in ("U", "P", "V")}


def _store_factors(prefix, F):
    paths = _factor_paths(prefix)
    store_matrix(paths["U"], F.U)
    store_matrix(paths["P"], F.Pk)
    store_matrix(paths["V"], F.V)
    return paths


def cmd_generate(args):
    P, F = gen_lowrank_transition(GenSpec(args.states, args.rank, args.seed))
    store_matrix(args.out, P.entries)
    if args.out_factors:
        _store_factors(args.out_factors, F)
    return 0


def cmd_decompose(args):
    if args.kernel_size < 1:
        raise CliError(f"--kernel-size must be >= 1, got {args.kernel_size}")
    P = _load_chain(args.input)
    if args.kernel_size > P.shape[0]:
        raise CliError(f"--kernel-size must be <= the number of states ({P.shape[0]}), "
                       f"got {args.kernel_size}")
    lu = args.lam if args.lambda_u is None else args.lambda_u
    lv = args.lam if args.lambda_v is None else args.lambda_v
    config = SolverConfig(
        k=args.kernel_size, lambda_u=lu, lambda_v=lv, step_policy=args.policy,
        alpha=args.alpha, beta=args.beta, gamma=args.gamma,
        c1=args.c, c2=args.c, c3=args.c,
        max_iters=args.max_iters, rel_tol=args.tol, seed=args.seed,
        threshold_scaling=args.threshold_scaling,
        paper_literal_steps=args.paper_literal_steps,
    )
    try:
        result = run(P, config)
    except DivergenceError as err:
        if err.trace is not None:
            err.trace.to_csv(f"{args.out_prefix}.trace.csv")
        print(f"error: {err}", file=sys.stderr)
        return 2
    _store_factors(args.out_prefix, result.factorization)
    result.trace.to_csv(f"{args.out_prefix}.trace.csv")
    return 0


def cmd_evaluate(args):
    P = _load_chain(args.input)
    paths = _factor_paths(args.factors)
    F = Factorization(load_matrix(paths["U"]), load_matrix(paths["P"]), load_matrix(paths["V"]))
    if any(m < 1 for m in args.msteps):
        raise CliError("--msteps values must be >= 1")
    evaluate(P, F, msteps=args.msteps).to_csv(args.out)
    return 0


def cmd_sweep(args):
    steps = args.steps
    if steps is None:
        steps = [args.c if args.c is not None else (1.0 if args.policy == "adaptive" else 0.2)]
    spec = SweepSpec(
        n=args.states, true_rank=args.rank, kernel_sizes=tuple(args.kernel_sizes),
        lambdas=tuple(args.lambdas), step_policy=args.policy, steps=tuple(steps),
        instances=args.instances, base_seed=args.base_seed,
        max_iters=args.max_iters, rel_tol=args.tol,
    )
    if args.threads < 1:
        raise CliError(f"--threads must be >= 1, got {args.threads}")
    sweep(spec, threads=args.threads).to_csv(args.out)
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "decompose": cmd_decompose,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (CliError, FormatError, ParameterError, DimensionError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: cannot access {err.filename}: {err.strerror}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

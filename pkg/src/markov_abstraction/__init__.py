"""Sparse stochastic abstractions of finite Markov chains.

A transition matrix ``P`` (n x n) is approximated by ``U Pk V`` where
``U`` (n x k), ``Pk`` (k x k) and ``V`` (k x n) are all row-stochastic, by
block coordinate gradient descent with simplex projection.
"""

from .estimator import MarkovAbstraction, check_transition_matrix
from .evaluation import (
    EvalReport,
    KernelChain,
    approx_error,
    build_kernel_chain,
    evaluate,
    kernel_mstep,
    kernel_power,
    kernel_propagate,
    mstep_error,
    sparsity_stats,
)
from .exceptions import DimensionError, DivergenceError, FormatError, ParameterError
from .harness import SweepResult, SweepSpec, aggregate, run_instance, sweep
from .matrix_io import load_matrix, store_matrix
from .simplex import prox_row_update, prox_rows, project_rows, project_simplex, soft_threshold
from .solver import (
    SolverConfig,
    SolverResult,
    SolverTrace,
    adaptive_step_p,
    adaptive_step_u,
    adaptive_step_v,
    grad_p,
    grad_u,
    grad_v,
    run,
    step,
)
from .stochastic import (
    Factorization,
    Objective,
    TransitionMatrix,
    matrix_power_mstep,
    objective,
    reconstruct,
    smooth_loss,
    validate_row_stochastic,
)
from .synthetic import (
    GenSpec,
    gen_lowrank_transition,
    gen_stochastic_matrix,
    numerical_rank,
    sample_simplex_row,
)

__version__ = "0.1.0"

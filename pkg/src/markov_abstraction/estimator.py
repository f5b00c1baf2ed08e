"""scikit-learn compatible estimator around the block coordinate solver."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .evaluation import approx_error, build_kernel_chain, kernel_propagate, sparsity_stats
from .exceptions import DimensionError, ParameterError
from .solver import SolverConfig, run
from .stochastic import first_invalid_row

INPUT_TOL = 1e-6


def check_transition_matrix(P, tol=INPUT_TOL):
    """Validate a square row-stochastic array and return it as float64."""
    P = check_array(P, dtype=np.float64, ensure_all_finite=True)
    if P.shape[0] != P.shape[1]:
        raise DimensionError(f"transition matrix must be square, got {P.shape}")
    row = first_invalid_row(P, tol)
    if row is not None:
        raise ParameterError(f"row {row} of the transition matrix is not a probability vector")
    return P


class MarkovAbstraction(TransformerMixin, BaseEstimator):
    """Abstract a Markov chain as ``P ~ U Pk V`` with row-stochastic factors.

    ``fit`` learns the state-to-meta-state map ``U`` (n x k), the kernel
    transition ``Pk`` (k x k) and the meta-state-to-state map ``V`` (k x n).
    ``transform`` aggregates distributions over states into distributions
    over meta states, ``inverse_transform`` maps them back, and ``predict``
    propagates state distributions ``m`` steps through the kernel chain at
    O(m k^2) cost per step.

    Parameters
    ----------
    n_components : int
        Kernel size k.
    lambda_u, lambda_v : float, default=0.0
        Sparsity weights for ``U`` and ``V``.
    step_policy : {'adaptive', 'constant'}, default='adaptive'
    alpha, beta, gamma : float, default=0.2
        Constant step sizes (``step_policy='constant'``).
    c : float, default=1.0
        Adaptive step multiplier for all three blocks, in (0, 2).
    max_iter : int, default=1000
    tol : float, default=1e-8
    random_state : int, default=0
    threshold_scaling : bool, default=False
    paper_literal_steps : bool, default=False

    Attributes
    ----------
    U_, kernel_transition_, V_ : ndarray
        Fitted factors.
    factorization_ : Factorization
    trace_ : SolverTrace
    n_iter_ : int
    termination_reason_ : str
    reconstruction_err_ : float
        ``||P - U Pk V||_F^2`` on the training chain.
    """

    def __init__(self, n_components=2, *, lambda_u=0.0, lambda_v=0.0, step_policy="adaptive",
                 alpha=0.2, beta=0.2, gamma=0.2, c=1.0, max_iter=1000, tol=1e-8,
                 random_state=0, threshold_scaling=False, paper_literal_steps=False):
        self.n_components = n_components
        self.lambda_u = lambda_u
        self.lambda_v = lambda_v
        self.step_policy = step_policy
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.c = c
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state
        self.threshold_scaling = threshold_scaling
        self.paper_literal_steps = paper_literal_steps

    def _config(self):
        return SolverConfig(
            k=self.n_components, lambda_u=self.lambda_u, lambda_v=self.lambda_v,
            step_policy=self.step_policy, alpha=self.alpha, beta=self.beta, gamma=self.gamma,
            c1=self.c, c2=self.c, c3=self.c, max_iters=self.max_iter, rel_tol=self.tol,
            seed=self.random_state, threshold_scaling=self.threshold_scaling,
            paper_literal_steps=self.paper_literal_steps,
        )

    def fit(self, X, y=None):
        P = check_transition_matrix(X)
        result = run(P, self._config())
        F = result.factorization
        self.factorization_ = F
        self.U_ = F.U
        self.kernel_transition_ = F.Pk
        self.V_ = F.V
        self.trace_ = result.trace
        self.n_iter_ = result.n_iter
        self.termination_reason_ = result.termination_reason
        self.reconstruction_err_ = approx_error(P, F)
        self.n_features_in_ = P.shape[1]
        self._chain = None
        return self

    def fit_transform(self, X, y=None):
        """Fit on ``X``, then aggregate its rows onto meta states (``X @ U``)."""
        return self.fit(X).transform(X)

    def _check_rows(self, X, width):
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != width:
            raise DimensionError(f"expected {width} columns, got {X.shape[1]}")
        return X

    def transform(self, X):
        """Aggregate distributions over states: ``X @ U``."""
        check_is_fitted(self, "U_")
        return self._check_rows(X, self.U_.shape[0]) @ self.U_

    def inverse_transform(self, Z):
        """Disaggregate distributions over meta states: ``Z @ V``."""
        check_is_fitted(self, "V_")
        return self._check_rows(Z, self.V_.shape[0]) @ self.V_

    @property
    def kernel_chain_(self):
        check_is_fitted(self, "factorization_")
        if getattr(self, "_chain", None) is None:
            self._chain = build_kernel_chain(self.factorization_)
        return self._chain

    def predict(self, X, m=1):
        """Distributions after ``m`` steps from each row of ``X`` via the kernel chain."""
        check_is_fitted(self, "factorization_")
        X = self._check_rows(X, self.U_.shape[0])
        return kernel_propagate(self.kernel_chain_, X, m)

    def sparsity(self, tol=1e-6):
        """Mean per-row support sizes of ``U`` and ``V``."""
        check_is_fitted(self, "factorization_")
        return sparsity_stats(self.factorization_, tol)

    def score(self, X, y=None):
        """Negative squared reconstruction error on ``X`` (higher is better)."""
        check_is_fitted(self, "factorization_")
        return -approx_error(check_transition_matrix(X), self.factorization_)


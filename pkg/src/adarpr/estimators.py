"""Scikit-learn style wrapper around the solvers."""
import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .bench import ALGORITHMS, AlgoSpec, run_algorithm
from .objective import RprProblem
from .operators import MeasurementOperator
from .problems import spectral_init
from .trace import Status

__all__ = ["RobustPhaseRetrieval"]


class RobustPhaseRetrieval(RegressorMixin, BaseEstimator):
    """Recover ``x`` from ``y_i ~ <X_i, x>^2`` with a fraction of gross outliers.

    Parameters
    ----------
    algorithm : str
        One of ``adasubgrad``, ``gsubgrad``, ``psubgrad``, ``ipl-lac``,
        ``ipl-hac``, ``adaipl-lac``, ``adaipl-hac``.
    G : float, optional
        Quantile step multiplier. Defaults to 0.5 for AdaSubGrad and
        ``100/n`` for AdaIPL.
    ptilde : float
        Residual quantile level.
    rho : float
        Inexactness parameter of the LAC/HAC test.
    q, lambda0_scale : float
        Geometric step decay and initial length (relative to ``||x0||``)
        for ``gsubgrad``.
    inner_solver : {"apg", "apd"}
    max_iter : int
        Outer iteration cap.
    tol : float
        Target relative error; only used when ``x_true`` is passed to
        :meth:`fit`. Otherwise the solver stops at a numerical fixed point
        or at ``max_iter``.
    init : {"spectral"} or array_like
        Starting point rule, or an explicit starting vector.
    random_state : int

    Attributes
    ----------
    coef_ : ndarray, shape (n_features,)
        Recovered signal, defined up to a global sign.
    problem_ : RprProblem
    trace_ : RunTrace
    n_iter_ : int
    status_ : str
    """

    def __init__(self, algorithm="adasubgrad", G=None, ptilde=0.5, rho=0.24, q=0.983,
                 lambda0_scale=0.1, inner_solver="apg", max_iter=1000, tol=1e-7,
                 init="spectral", random_state=0):
        self.algorithm = algorithm
        self.G = G
        self.ptilde = ptilde
        self.rho = rho
        self.q = q
        self.lambda0_scale = lambda0_scale
        self.inner_solver = inner_solver
        self.max_iter = max_iter
        self.tol = tol
        self.init = init
        self.random_state = random_state

    def _problem(self, X, y, x_true):
        if isinstance(X, MeasurementOperator):
            y = check_array(y, ensure_2d=False)
            return RprProblem.from_operator(X, y, truth=x_true, seed=self.random_state)
        X, y = check_X_y(X, y, y_numeric=True)
        return RprProblem.from_operator(X, y, truth=x_true, seed=self.random_state)

    def fit(self, X, y, x_true=None):
        """Fit on a sensing matrix (or operator) ``X`` and measurements ``y``."""
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if not (isinstance(self.max_iter, (int, np.integer)) and self.max_iter >= 1):
            raise ValueError("max_iter must be a positive integer")
        problem = self._problem(X, y, x_true)
        if isinstance(self.init, str):
            if self.init != "spectral":
                raise ValueError(f"unknown init {self.init!r}")
            x0 = spectral_init(problem, seed=self.random_state)
        else:
            x0 = np.asarray(self.init, dtype=np.float64)
        params = {"ptilde": self.ptilde, "rho_l": self.rho, "rho_h": self.rho, "q": self.q,
                  "lambda0_scale": self.lambda0_scale, "inner_solver": self.inner_solver,
                  "max_iter": self.max_iter, "max_outer": self.max_iter}
        if self.G is not None:
            params["G"] = params["G_ipl"] = self.G
        x, trace = run_algorithm(AlgoSpec(self.algorithm), problem, x0, self.tol, **params)
        if trace.status in (Status.DIVERGED, Status.INNER_FAILURE):
            raise RuntimeError(f"{self.algorithm} stopped with status {trace.status.value}: "
                               f"{trace.info}")
        self.coef_ = x
        self.problem_ = problem
        self.trace_ = trace
        self.n_iter_ = trace.n_iter
        self.status_ = trace.status.value
        self.n_features_in_ = problem.n
        return self

    def predict(self, X):
        """Predicted intensities ``(X @ coef_)^2``."""
        check_is_fitted(self, "coef_")
        if isinstance(X, MeasurementOperator):
            Ax = X.apply(self.coef_)
        else:
            X = check_array(X)
            if X.shape[1] != self.n_features_in_:
                raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
            Ax = X @ self.coef_
        return Ax * Ax

    def robust_loss(self, X, y):
        """Mean absolute residual ``mean |(X coef_)^2 - y|``."""
        return float(np.mean(np.abs(self.predict(X) - np.asarray(y, dtype=np.float64))))

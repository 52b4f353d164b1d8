"""The robust phase retrieval loss and the quantities built from it.

The loss is ``F(x) = (1/m) * sum_i |<a_i, x>^2 - b_i|``. It is weakly
convex with modulus ``L = 2 * ||A||_2^2 / m`` and invariant under
``x -> -x``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_float_vector, check_open_unit, check_positive
from .operators import DenseOperator, MeasurementOperator, spectral_norm

__all__ = [
    "RprProblem",
    "ResidualView",
    "objective_value",
    "residuals",
    "quantile_index",
    "quantile_residual",
    "subgradient",
    "distance_to_truth",
    "relative_error",
    "model_value",
]


@dataclass(frozen=True, eq=False)
class RprProblem:
    """Measurements ``b_i ~ <a_i, x>^2`` with an optional corrupted subset.

    Attributes
    ----------
    op : MeasurementOperator
    b : ndarray, shape (m,)
        Non-negative measurements.
    L : float
        Weak-convexity constant ``2 ||A||_2^2 / m``.
    truth : ndarray or None
        Ground-truth signal, used only for error reporting.
    corrupted : ndarray of int or None
        Indices of corrupted measurements.
    """

    op: MeasurementOperator
    b: np.ndarray
    L: float
    truth: np.ndarray = None
    corrupted: np.ndarray = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        b = as_float_vector(self.b, self.op.rows, "b").copy()
        if np.any(b < 0) or not np.all(np.isfinite(b)):
            raise ValueError("measurements must be finite and non-negative")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)
        check_positive(self.L, "L")
        if self.truth is not None:
            truth = as_float_vector(self.truth, self.op.cols, "truth").copy()
            truth.setflags(write=False)
            object.__setattr__(self, "truth", truth)
        if self.corrupted is not None:
            idx = np.asarray(self.corrupted, dtype=np.intp)
            object.__setattr__(self, "corrupted", idx)

    @classmethod
    def from_operator(cls, op, b, truth=None, corrupted=None, L=None, seed=0, **meta):
        """Build a problem, estimating ``L`` by power iteration if not given."""
        if not isinstance(op, MeasurementOperator):
            op = DenseOperator(op)
        if L is None:
            L = 2.0 * spectral_norm(op, seed=seed) ** 2 / op.rows
        return cls(op, b, L, truth, corrupted, dict(meta))

    @property
    def m(self):
        return self.op.rows

    @property
    def n(self):
        return self.op.cols

    def view(self, x):
        """Residuals at ``x`` sharing one forward product."""
        x = as_float_vector(x, self.n)
        Ax = self.op.apply(x)
        return ResidualView(np.abs(Ax * Ax - self.b), Ax)


@dataclass(frozen=True, eq=False)
class ResidualView:
    """Absolute residuals ``r_i = |<a_i,x>^2 - b_i|`` and the cached ``Ax``."""

    r: np.ndarray
    Ax: np.ndarray

    @property
    def value(self):
        return float(np.mean(self.r))

    def quantile(self, ptilde):
        k = quantile_index(self.r.size, ptilde)
        return float(np.partition(self.r, k - 1)[k - 1])


def residuals(problem, x):
    return problem.view(x).r


def objective_value(problem, x):
    """``F(x)``, the mean absolute residual."""
    return problem.view(x).value


def quantile_index(m, ptilde):
    """1-based order-statistic index ``ceil(m * ptilde)``, clamped to [1, m].

    The product is rounded to 9 decimals first so that e.g. ``10 * 0.3``
    maps to 3 rather than 4.
    """
    check_open_unit(ptilde, "ptilde")
    k = math.ceil(round(m * ptilde, 9))
    return min(max(k, 1), m)


def quantile_residual(problem, x, ptilde):
    """The ``ceil(m * ptilde)``-th smallest absolute residual at ``x``."""
    return problem.view(x).quantile(ptilde)


def _subgradient_from(problem, view):
    m = problem.m
    Ax = view.Ax
    s = np.sign(Ax * Ax - problem.b)
    return (2.0 / m) * problem.op.apply_transpose(Ax * s)


def subgradient(problem, x):
    """``(2/m) A^T (Ax * sign(|Ax|^2 - b))`` with ``sign(0) = 0``."""
    return _subgradient_from(problem, problem.view(x))


def distance_to_truth(problem, x):
    """``min(||x - x*||, ||x + x*||)``."""
    if problem.truth is None:
        raise ValueError("problem has no ground truth")
    x = as_float_vector(x, problem.n)
    return float(min(np.linalg.norm(x - problem.truth), np.linalg.norm(x + problem.truth)))


def relative_error(problem, x):
    return distance_to_truth(problem, x) / float(np.linalg.norm(problem.truth))


def model_value(problem, z, y, t):
    """Proximal linear model ``F_t(z; y)``.

    ``(1/m) || |Ay|^2 - b + 2 (Ay) * A(z - y) ||_1 + ||z - y||^2 / (2t)``
    """
    if not t > 0:
        raise ValueError(f"t must be positive, got {t!r}")
    z = as_float_vector(z, problem.n, "z")
    y = as_float_vector(y, problem.n, "y")
    Ay = problem.op.apply(y)
    step = z - y
    lin = Ay * Ay - problem.b + 2.0 * Ay * problem.op.apply(step)
    return float(np.mean(np.abs(lin)) + step @ step / (2.0 * t))

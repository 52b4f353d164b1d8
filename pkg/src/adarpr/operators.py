"""Real linear measurement operators for phase retrieval.

Two kinds are provided: an explicit dense matrix and a stack of
sign-randomized Hadamard blocks that is applied with the fast
Walsh-Hadamard transform and never materialized.
"""
import numpy as np

from ._validation import as_float_vector, make_rng

__all__ = [
    "MeasurementOperator",
    "DenseOperator",
    "HadamardEnsemble",
    "fwht_normalized",
    "spectral_norm",
    "power_iteration",
]


def _is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


def fwht_normalized(v, inplace=False):
    """Orthonormal fast Walsh-Hadamard transform along the last axis.

    Computes ``H_n @ v`` where ``H_n`` is the Sylvester-ordered Hadamard
    matrix scaled by ``1/sqrt(n)``. ``H_n`` is symmetric and orthogonal, so
    the transform is its own inverse.

    Parameters
    ----------
    v : array_like, shape (..., n)
        Input; ``n`` must be a power of two. Leading axes are batched.
    inplace : bool
        Overwrite ``v`` (must then be a float64 ndarray).

    Returns
    -------
    ndarray, shape (..., n)
    """
    if inplace:
        out = v
    else:
        out = np.array(v, dtype=np.float64, copy=True)
    n = out.shape[-1]
    if not _is_power_of_two(n):
        raise ValueError(f"transform length must be a power of two, got {n}")
    lead = out.shape[:-1]
    h = 1
    while h < n:
        blocks = out.reshape(*lead, n // (2 * h), 2, h)
        top = blocks[..., 0, :].copy()
        blocks[..., 0, :] += blocks[..., 1, :]
        blocks[..., 1, :] = top - blocks[..., 1, :]
        h *= 2
    out *= 1.0 / np.sqrt(n)
    return out


class MeasurementOperator:
    """Base class for an ``m x n`` real linear map.

    Subclasses implement ``_apply`` and ``_apply_transpose`` on validated
    1-D float arrays. Instances are immutable after construction.
    """

    shape = (0, 0)

    @property
    def rows(self):
        return self.shape[0]

    @property
    def cols(self):
        return self.shape[1]

    def apply(self, x):
        """Return ``A @ x``."""
        x = as_float_vector(x, self.cols, "x")
        return self._apply(x)

    def apply_transpose(self, y):
        """Return ``A.T @ y``."""
        y = as_float_vector(y, self.rows, "y")
        return self._apply_transpose(y)

    def row_norms(self):
        """Euclidean norm of every row ``a_i``."""
        return np.linalg.norm(self.to_dense(), axis=1)

    def to_dense(self):
        """Materialize the operator column by column (small sizes only)."""
        eye = np.eye(self.cols)
        return np.column_stack([self._apply(eye[:, j]) for j in range(self.cols)])

    def _apply(self, x):
        raise NotImplementedError

    def _apply_transpose(self, y):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(shape={self.shape})"


class DenseOperator(MeasurementOperator):
    """Explicit sensing matrix whose rows are the vectors ``a_i``."""

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=np.float64, order="C", ndmin=2)
        if matrix.ndim != 2:
            raise ValueError("sensing matrix must be two-dimensional")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("sensing matrix has non-finite entries")
        matrix.setflags(write=False)
        self.matrix = matrix
        self.shape = matrix.shape

    def _apply(self, x):
        return self.matrix @ x

    def _apply_transpose(self, y):
        return self.matrix.T @ y

    def row_norms(self):
        return np.linalg.norm(self.matrix, axis=1)

    def to_dense(self):
        return self.matrix.copy()


class HadamardEnsemble(MeasurementOperator):
    """Stacked blocks ``sqrt(n) * H_n @ diag(s_j)`` for ``j = 1..k``.

    Only the ``k`` sign vectors are stored. Row ``j*n + i`` of the operator
    is row ``i`` of block ``j``. Because every block is ``sqrt(n)`` times an
    orthogonal matrix, ``A.T @ A = k * n * I`` (stored as ``gram_scale``).

    Parameters
    ----------
    signs : array_like, shape (k, n)
        Entries in {-1, +1}; ``n`` a power of two.
    """

    def __init__(self, signs):
        signs = np.array(signs, dtype=np.float64, ndmin=2)
        if signs.ndim != 2:
            raise ValueError("signs must have shape (k, n)")
        k, n = signs.shape
        if k < 1:
            raise ValueError("need at least one block")
        if not _is_power_of_two(n):
            raise ValueError(f"signal length must be a power of two, got {n}")
        if not np.all(np.abs(signs) == 1.0):
            raise ValueError("sign vectors must have entries in {-1, +1}")
        signs.setflags(write=False)
        self.signs = signs
        self.n_blocks = k
        self.scale = np.sqrt(n)
        self.shape = (k * n, n)
        self.gram_scale = float(k * n)

    @classmethod
    def random(cls, n, n_blocks=6, seed=0):
        """Draw ``n_blocks`` uniform sign diagonals from a seeded stream."""
        rng = make_rng(seed)
        signs = rng.choice(np.array([-1.0, 1.0]), size=(n_blocks, n))
        return cls(signs)

    def _apply(self, x):
        out = fwht_normalized(self.signs * x, inplace=True)
        out *= self.scale
        return out.reshape(-1)

    def _apply_transpose(self, y):
        blocks = fwht_normalized(y.reshape(self.n_blocks, -1))
        blocks *= self.signs
        return self.scale * blocks.sum(axis=0)

    def row_norms(self):
        # every entry of sqrt(n) * H_n * S_j is +-1
        return np.full(self.rows, np.sqrt(self.cols))


def spectral_norm(op, tol=1e-8, max_iter=1000, seed=0):
    """Largest singular value of ``op`` by power iteration on ``A.T @ A``.

    Stops once the relative change of the Rayleigh quotient drops to
    ``tol``. The start vector is drawn from ``seed``, so the result is
    deterministic. Returns 0.0 for the zero operator.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    sigma, _ = power_iteration(op.apply, op.apply_transpose, op.cols, tol, max_iter, seed)
    return sigma


def power_iteration(fwd, adj, n, tol=1e-8, max_iter=1000, seed=0, v0=None):
    """Top singular value of a matrix-free map given forward/adjoint callables.

    Returns ``(sigma, v)`` with ``v`` the final unit right singular vector
    estimate, which can warm-start a later call on a nearby operator.
    """
    if v0 is None:
        v = make_rng(seed).standard_normal(n)
    else:
        v = np.array(v0, dtype=np.float64)
    v /= np.linalg.norm(v)
    rayleigh = 0.0
    for _ in range(max_iter):
        w = adj(fwd(v))
        new = float(v @ w)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0, v
        v = w / norm_w
        if abs(new - rayleigh) <= tol * abs(new):
            rayleigh = new
            break
        rayleigh = new
    return float(np.sqrt(max(rayleigh, 0.0))), v

"""Synthetic and image-based robust phase retrieval instances.

Corruption follows the sparse heavy-tailed model: a random subset of
``ceil(m * p_fail)`` measurements is replaced by
``M * tan(pi/2 * U)`` with ``U ~ Uniform(0, 1)`` and ``M`` the lower sample
median of the clean measurements.
"""
import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from ._validation import as_float_vector, check_positive, make_rng, spawn_rngs
from .objective import RprProblem
from .operators import DenseOperator, HadamardEnsemble, power_iteration

__all__ = [
    "SyntheticSpec",
    "ImageSpec",
    "covariance_profile",
    "gen_synthetic",
    "gen_hadamard_problem",
    "read_ppm",
    "write_ppm",
    "image_to_signal",
    "signal_to_image",
    "lower_median",
    "spectral_init",
    "warm_start",
]

MAX_SIGNAL_LENGTH = 2**26


def lower_median(values):
    """Lower-middle order statistic, ``sorted(values)[(len - 1) // 2]``."""
    values = np.asarray(values, dtype=np.float64)
    k = (values.size - 1) // 2
    return float(np.partition(values, k)[k])


def covariance_profile(n):
    """Diagonal covariance ``s_i = 1 - 0.75 (i - 1)/(n - 1)``, from 1 down to 0.25."""
    if n == 1:
        return np.ones(1)
    return 1.0 - 0.75 * np.arange(n) / (n - 1)


def _corrupt(b_clean, p_fail, rng):
    m = b_clean.size
    n_bad = math.ceil(round(m * p_fail, 9))
    if not 2 * n_bad < m:
        raise ValueError(f"ceil(m * p_fail) = {n_bad} must stay below m/2 = {m / 2}")
    idx = np.sort(rng.choice(m, size=n_bad, replace=False))
    b = b_clean.copy()
    if n_bad:
        scale = lower_median(b_clean)
        b[idx] = scale * np.tan(0.5 * np.pi * rng.uniform(size=n_bad))
    return b, idx


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    m: int
    p_fail: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        if not 0.0 <= self.p_fail < 0.5:
            raise ValueError("p_fail must lie in [0, 1/2)")


def gen_synthetic(spec):
    """Gaussian instance with a decaying diagonal covariance.

    Rows ``a_i ~ N(0, diag(s))``, truth ``x* in {-1, 1}^n``, clean
    measurements ``<a_i, x*>^2`` and sparse Cauchy-type corruption. All
    draws come from child streams of ``spec.seed``.
    """
    rng_a, rng_x, rng_c, _ = spawn_rngs(spec.seed, 4)
    A = rng_a.standard_normal((spec.m, spec.n)) * np.sqrt(covariance_profile(spec.n))
    truth = rng_x.choice(np.array([-1.0, 1.0]), size=spec.n)
    op = DenseOperator(A)
    Ax = op.apply(truth)
    b, idx = _corrupt(Ax * Ax, spec.p_fail, rng_c)
    return RprProblem.from_operator(op, b, truth=truth, corrupted=idx,
                                    seed=spec.seed, kind="synthetic")


_PPM_HEADER = re.compile(rb"\AP6(?:\s+|#[^\n]*\n)+?(\d+)(?:\s+|#[^\n]*\n)+?(\d+)"
                         rb"(?:\s+|#[^\n]*\n)+?(\d+)\s")


def read_ppm(path):
    """Read a binary 8-bit PPM (P6) into an ``(height, width, 3)`` uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    match = _PPM_HEADER.match(data)
    if match is None:
        raise ValueError(f"{path}: not a binary P6 PPM file")
    width, height, maxval = (int(g) for g in match.groups())
    if width < 1 or height < 1:
        raise ValueError(f"{path}: empty image")
    if not 0 < maxval < 256:
        raise ValueError(f"{path}: only 8-bit PPM is supported (maxval={maxval})")
    need = width * height * 3
    pixels = data[match.end():match.end() + need]
    if len(pixels) != need:
        raise ValueError(f"{path}: truncated pixel data")
    img = np.frombuffer(pixels, dtype=np.uint8).reshape(height, width, 3)
    if img.max(initial=0) > maxval:
        raise ValueError(f"{path}: sample exceeds maxval")
    return img.copy()


def write_ppm(path, image):
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError("expected an (height, width, 3) uint8 array")
    height, width, _ = image.shape
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (width, height))
        fh.write(np.ascontiguousarray(image).tobytes())


def image_to_signal(image):
    """Channel-major vectorization in [0, 1], zero-padded to a power of two."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError("expected an RGB image of shape (height, width, 3)")
    flat = np.transpose(image, (2, 0, 1)).reshape(-1).astype(np.float64) / 255.0
    n = 1 << max(flat.size - 1, 0).bit_length()
    if n > MAX_SIGNAL_LENGTH:
        raise ValueError(f"signal length {n} exceeds {MAX_SIGNAL_LENGTH}")
    signal = np.zeros(n)
    signal[:flat.size] = flat
    return signal


def signal_to_image(signal, height, width):
    """Inverse of :func:`image_to_signal`; values are clipped and rounded.

    Recovery is up to a global sign, so a signal whose prefix sums to a
    negative value is flipped first.
    """
    signal = np.asarray(signal, dtype=np.float64)
    flat = signal[:3 * height * width]
    if flat.sum() < 0:
        flat = -flat
    img = np.rint(np.clip(flat, 0.0, 1.0) * 255.0).astype(np.uint8)
    return np.transpose(img.reshape(3, height, width), (1, 2, 0))


@dataclass(frozen=True)
class ImageSpec:
    path: str = None
    n_blocks: int = 6
    p_fail: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_blocks < 1:
            raise ValueError("n_blocks must be positive")
        if not 0.0 <= self.p_fail < 0.5:
            raise ValueError("p_fail must lie in [0, 1/2)")


def gen_hadamard_problem(spec, image=None):
    """Image recovery instance sensed by a random Hadamard ensemble.

    The image is read from ``spec.path`` unless an array is passed. With
    ``k = spec.n_blocks`` blocks, ``m = k n`` and ``A^T A = k n I`` so that
    ``L = 2`` exactly; that value is used instead of an estimate.
    """
    if image is None:
        if spec.path is None:
            raise ValueError("ImageSpec.path or an image array is required")
        image = read_ppm(spec.path)
    truth = image_to_signal(image)
    rng_s, rng_c = spawn_rngs(spec.seed, 2)
    op = HadamardEnsemble.random(truth.size, spec.n_blocks, seed=rng_s)
    Ax = op.apply(truth)
    b, idx = _corrupt(Ax * Ax, spec.p_fail, rng_c)
    return RprProblem(op, b, 2.0, truth, idx,
                      {"kind": "image", "image_shape": tuple(image.shape)})


def spectral_init(problem, method="orthogonal", truncation=9.0, power_tol=1e-10,
                  max_iter=5000, seed=0):
    """Spectral initial point; the global sign is arbitrary.

    ``method="orthogonal"`` (default) looks for the direction the small
    measurements are most orthogonal to: the top generalized eigenvector of
    ``X_big = (1/m) sum_{b_i > med} a_i a_i^T`` against the Gram matrix
    ``S = A^T A / m``. The norm is then matched to the data,
    ``r^2 = med(b) / med((A d)^2)``. Both medians ignore the size of
    corrupted values.

    ``method="truncated"`` returns ``sqrt(med(b))`` times the leading
    eigenvector of ``(1/m) sum_i b_i a_i a_i^T [b_i <= truncation * med(b)]``.

    ``med`` is the lower median throughout.
    """
    if problem.m < problem.n:
        raise ValueError("spectral initialization needs m >= n")
    b = problem.b
    med = lower_median(b)
    if med <= 0:
        raise ValueError("measurements carry no energy")
    op = problem.op
    if method == "truncated":
        root_w = np.sqrt(np.where(b <= truncation * med, b, 0.0) / problem.m)
        _, d = power_iteration(lambda v: root_w * op.apply(v),
                               lambda y: op.apply_transpose(root_w * y),
                               problem.n, tol=power_tol, max_iter=max_iter, seed=seed)
        return np.sqrt(med) * d / np.linalg.norm(d)
    if method != "orthogonal":
        raise ValueError(f"unknown initialization method {method!r}")

    big = (b > med).astype(np.float64)
    gram = getattr(op, "gram_scale", None)
    if gram is not None:
        _, d = power_iteration(lambda v: big * op.apply(v), lambda y: op.apply_transpose(big * y),
                               problem.n, tol=power_tol, max_iter=max_iter, seed=seed)
    else:
        A = op.to_dense()
        chol = np.linalg.cholesky(A.T @ A)
        A_big = A[big > 0]

        def fwd(u):
            return A_big @ solve_triangular(chol, u, lower=True, trans="T")

        def adj(y):
            return solve_triangular(chol, A_big.T @ y, lower=True)

        _, u = power_iteration(fwd, adj, problem.n, tol=power_tol,
                               max_iter=max_iter, seed=seed)
        d = solve_triangular(chol, u, lower=True, trans="T")
    d /= np.linalg.norm(d)
    Ad = op.apply(d)
    return np.sqrt(med / lower_median(Ad * Ad)) * d


def warm_start(problem, rel_delta, seed=0):
    """``x* + rel_delta * ||x*|| * u`` for a seeded random unit vector ``u``."""
    if problem.truth is None:
        raise ValueError("warm start needs the ground truth")
    if rel_delta < 0 or not np.isfinite(rel_delta):
        raise ValueError("rel_delta must be non-negative")
    truth = as_float_vector(problem.truth, problem.n)
    if rel_delta == 0:
        return truth.copy()
    check_positive(rel_delta, "rel_delta")
    u = make_rng(seed).standard_normal(problem.n)
    u /= np.linalg.norm(u)
    return truth + rel_delta * np.linalg.norm(truth) * u

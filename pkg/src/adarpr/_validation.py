"""Input validation and seeded randomness shared across the package."""
import numbers

import numpy as np


def make_rng(seed):
    """Counter-based Philox generator.

    ``seed`` may be an int, a ``SeedSequence`` or an existing ``Generator``
    (returned unchanged).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def spawn_rngs(seed, count):
    """Independent child streams derived from one run seed."""
    return [make_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def as_float_vector(x, size, name="x"):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.shape[0] != size:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {size}")
    return arr


def check_open_unit(value, name):
    if not (isinstance(value, numbers.Real) and 0.0 < value < 1.0):
        raise ValueError(f"{name} must lie in (0, 1), got {value!r}")
    return float(value)


def check_positive(value, name):
    if not (isinstance(value, numbers.Real) and np.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be positive, got {value!r}")
    return float(value)

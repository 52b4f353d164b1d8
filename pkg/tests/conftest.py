import numpy as np
import pytest

from adarpr import RprProblem, SyntheticSpec, gen_synthetic


@pytest.fixture
def tiny():
    """A = [[1], [2]], b = [1, 4]: noiseless, x* = 1, L = 5."""
    return RprProblem.from_operator(np.array([[1.0], [2.0]]), [1.0, 4.0], truth=[1.0])


@pytest.fixture(scope="session")
def small_synthetic():
    return gen_synthetic(SyntheticSpec(20, 160, 0.1, 3))

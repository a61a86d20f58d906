import numpy as np
import pytest

from fracpq.domain import FracParams, WeightField, build_grid, build_kernel
from fracpq.problem import build_problem, weight_profile


@pytest.fixture
def unit_grid32():
    return build_grid(0.0, 1.0, 32)


@pytest.fixture
def kernel32(unit_grid32):
    return build_kernel(unit_grid32, 0.4, 2.0)


@pytest.fixture
def ones32(unit_grid32):
    return WeightField(np.ones(unit_grid32.n))


@pytest.fixture
def bounded_problem32(unit_grid32):
    params = FracParams(alpha=0.3, beta=0.4, p=3.0, q=2.0)
    a = weight_profile("one", unit_grid32)
    b = weight_profile("indefinite", unit_grid32)
    return build_problem(unit_grid32, params, a, b)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

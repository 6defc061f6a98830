import numpy as np
import pytest

from toric_bounds.checks import skew_square, unit_triangle
from toric_bounds.polytope import builtin_polytope


@pytest.fixture
def cpn2():
    return builtin_polytope("cpn_simplex", 2)


@pytest.fixture
def square():
    return builtin_polytope("rectangle", 1)


@pytest.fixture
def trapezoid1():
    return builtin_polytope("trapezoid", 1)


@pytest.fixture
def triangle():
    return unit_triangle()


@pytest.fixture
def skew():
    return skew_square()


@pytest.fixture
def rng():
    return np.random.default_rng(7)

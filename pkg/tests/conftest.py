import pytest

from models import ProblemSpec
from resources.problems import build_problem, initial_data
from resources.rk import builtin_tableau


@pytest.fixture
def wave():
    return build_problem(ProblemSpec(kind = "wave", bc = "periodic", N = 32))


@pytest.fixture
def linear_wave():
    return build_problem(ProblemSpec(kind = "wave", bc = "periodic", potential = (0.0,), N = 32))


@pytest.fixture
def nls():
    return build_problem(ProblemSpec(kind = "nls", bc = "periodic", potential = (0.0, 1.0), N = 32))


@pytest.fixture
def midpoint():
    return builtin_tableau("midpoint")


@pytest.fixture
def gauss2():
    return builtin_tableau("gauss2")


@pytest.fixture
def smooth_data(wave):
    return initial_data(wave, 2.0)

import pytest

from forge.fourierlab import build_counterexample
from forge.polycore import MultiPoly


def conic():
    x = [MultiPoly.variable(i, 3) for i in range(3)]
    return x[0] * x[2] - x[1] ** 2


@pytest.fixture(scope="session")
def conic_poly():
    return conic()


@pytest.fixture(scope="session")
def flagship_pair():
    return build_counterexample(conic(), R=30, m=128)

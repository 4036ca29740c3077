import math

import numpy as np
import pytest

from kacbath import AngleDistribution, GeneratorParams
from kacbath.engine import trajectory_rng


def raised_cosine(theta):
    return (1.0 + np.cos(theta)) / (2.0 * math.pi)


@pytest.fixture
def params28():
    return GeneratorParams(M=2, N=8, lambda_S=1.0, lambda_R=1.0, mu=1.0)


@pytest.fixture
def params24():
    return GeneratorParams(M=2, N=4, lambda_S=1.0, lambda_R=1.0, mu=1.0)


@pytest.fixture
def uniform_rho():
    return AngleDistribution.uniform()


@pytest.fixture
def rng():
    return trajectory_rng(987654321, 0)

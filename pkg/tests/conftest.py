import numpy as np
import pytest

from gbspe.linalg import ProblemShape, sample_problem_instance
from gbspe.rng import derive_rng


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_instance(seed: int, n_vars: int, half_degree: int):
    gen = derive_rng(seed, 99, n_vars, half_degree)
    instance, _ = sample_problem_instance(gen, ProblemShape(n_vars, half_degree))
    return instance

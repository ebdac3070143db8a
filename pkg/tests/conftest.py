import numpy as np
import pytest

from hmsvm.core import Dataset


@pytest.fixture
def contradictory_pair():
    """Two samples at the same point with opposite labels (features zero)."""
    return Dataset([[0.0], [0.0]], [1.0, -1.0], "contradictory_pair_x0")


@pytest.fixture
def contradictory_pair_x1():
    """Opposite labels at x = 1: conflicting, with nonzero feature norms."""
    return Dataset([[1.0], [1.0]], [1.0, -1.0], "contradictory_pair_x1")


@pytest.fixture
def separable_pair():
    return Dataset([[-1.0], [1.0]], [-1.0, 1.0], "separable_pair")


def random_dataset(seed, n, m, spread=1.5):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, m)) * spread
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return Dataset(X, y, f"rand_s{seed}_n{n}_m{m}")

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from lokal.data import Dataset


def random_psd_gram(rng: np.random.Generator, n: int, rank: int | None = None) -> np.ndarray:
    A = rng.normal(size=(n, rank or n))
    G = A @ A.T
    return np.triu(G) + np.triu(G, 1).T


def random_dataset(rng: np.random.Generator, n: int = 40, d: int = 2) -> Dataset:
    """Linearly-ish separable two-class data with both classes guaranteed."""
    X = rng.normal(size=(n, d))
    w = rng.normal(size=d)
    y = np.where(X @ w + 0.1 * rng.normal(size=n) > 0, 1.0, -1.0)
    if np.all(y == y[0]):
        y[: n // 2] = -y[0]
    return Dataset(X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

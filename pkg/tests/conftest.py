import numpy as np
import pytest

from embalign import EmbeddingMatrix


def make_ids(n, prefix="it"):
    return tuple(f"{prefix}{i:04d}" for i in range(n))


def random_embedding(rng, count, dims, prefix="it"):
    return EmbeddingMatrix(rng.standard_normal((count, dims)), make_ids(count, prefix))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)

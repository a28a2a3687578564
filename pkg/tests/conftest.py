import numpy as np
import pytest

from miml.core import Bag, MimlDataset


def random_bag(rng, d, n_min=1, n_max=4, ident="b"):
    n = int(rng.integers(n_min, n_max + 1))
    return Bag(ident, rng.normal(size=(n, d)))


def random_dataset(rng, m=6, T=3, d=2, n_max=4):
    """Small random dataset with 1 <= |Y| <= T-1 (evaluation-safe)."""
    examples = []
    for i in range(m):
        bag = random_bag(rng, d, n_max=n_max, ident=f"b{i}")
        size = int(rng.integers(1, T))  # at most T-1 labels
        labels = frozenset(int(v) for v in rng.choice(T, size=size, replace=False))
        examples.append((bag, labels))
    return MimlDataset(tuple(examples), T=T, d=d)


@pytest.fixture
def rng():
    return np.random.default_rng(7)

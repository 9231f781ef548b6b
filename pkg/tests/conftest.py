import numpy as np
import pytest

from fedpoison.datasets import Dataset, DataShard, as_shard


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def make_dataset(n=12, d=4, n_classes=3, seed=0):
    gen = np.random.default_rng(seed)
    features = gen.random((n, d))
    labels = gen.integers(0, n_classes, n)
    labels[:n_classes] = np.arange(n_classes)  # every class present
    return Dataset(features, labels, n_classes)


@pytest.fixture
def tiny_dataset():
    return make_dataset()


@pytest.fixture
def tiny_shard(tiny_dataset):
    return as_shard(tiny_dataset, owner_id=0)


def random_models(n_models, dim, seed=0, scale=1.0):
    gen = np.random.default_rng(seed)
    return gen.normal(0.0, scale, (n_models, dim))

import numpy as np
import pytest

from dsvmsim.data import LabeledSet, gen_gaussian, partition
from dsvmsim.engine import EngineConfig, train
from dsvmsim.topology import build_complete


def gaussian_nodes(net, seed, n_train=40, n_test=500, separation=1.0):
    """Per-node splits of a pooled two-Gaussian dataset (generator defaults)."""
    v = net.node_count
    per_class = (v * (n_train + n_test) + 1) // 2
    pool, _ = gen_gaussian(per_class, 1,
                           mean_pos=(1.0, 1.0),
                           mean_neg=(1.0 + separation, 1.0 + separation),
                           seed=seed)
    return partition(pool, net, n_train, n_test, seed=seed)


@pytest.fixture(scope="session")
def net6():
    return build_complete(6)


BASE_CFG = EngineConfig(max_iters=1500)


@pytest.fixture(scope="session")
def nodes6(net6):
    return gaussian_nodes(net6, seed=2)


@pytest.fixture(scope="session")
def baseline6(net6, nodes6):
    """Converged no-attack run reused by identity tests."""
    return train(net6, nodes6, BASE_CFG, record_state=True)


def pooled(node_data, part):
    xs = np.vstack([getattr(d, part).features for d in node_data])
    ys = np.concatenate([getattr(d, part).labels for d in node_data])
    return LabeledSet(xs, ys)

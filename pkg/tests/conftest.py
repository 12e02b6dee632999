import itertools

import numpy as np
import pytest

from marscd.model import DcsbmParams, LayerLabels, expected_adjacency


def planted_expectations(n, K, L, theta=0.3, B=None, labels=None):
    """Expectation matrices (zero diagonal) of a q1 = 0 Multi-DCSBM."""
    if B is None:
        B = 0.9 * np.eye(K) + 0.1 * np.ones((K, K))
    if labels is None:
        labels = np.arange(n) % K
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (n,))
    params = DcsbmParams(
        theta=np.tile(theta, (L, 1)),
        B=B,
        labels=LayerLabels(K, np.tile(labels, (L, 1))),
    )
    return [expected_adjacency(params, l) for l in range(L)], labels


def brute_force_misclustering(est, truth, K):
    est, truth = np.asarray(est), np.asarray(truth)
    best = 0
    for perm in itertools.permutations(range(K)):
        best = max(best, int(np.sum(np.asarray(perm)[est] == truth)))
    return 1 - best / est.size


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from marscd.align import (
    alignment_objective,
    confusion,
    consensus_align,
    consensus_matrix,
    update_perm,
    update_xi,
)
from marscd.evaluation import misclustering


def one_hot(lab, K):
    return np.eye(K)[lab]


def brute_objective(labels, perms, xi, K):
    """Triple loop over layer pairs and nodes."""
    L, n = len(labels), len(labels[0])
    J = 0.0
    for l in range(L):
        for s in range(l + 1, L):
            t = sum(1 for i in range(n) if perms[l][labels[l][i]] == perms[s][labels[s][i]])
            J += 2 * xi[l] * xi[s] * t
    return J


def noisy_copies(truth, K, L, flip, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(L):
        lab = truth.copy()
        m = rng.random(truth.size) < flip
        lab[m] = rng.integers(K, size=m.sum())
        out.append(lab)
    return out


# -- objective -------------------------------------------------------------------


def test_objective_identical_two_layers():
    lab = np.arange(10) % 3
    ident = [np.arange(3)] * 2
    assert alignment_objective([lab, lab], ident, [0.5, 0.5]) == pytest.approx(5.0)


def test_objective_single_weighted_layer_is_zero():
    rng = np.random.default_rng(0)
    labels = [rng.integers(3, size=20) for _ in range(4)]
    assert alignment_objective(labels, [np.arange(3)] * 4, [1, 0, 0, 0]) == 0


def test_objective_matches_brute_force():
    rng = np.random.default_rng(12)
    labels = [rng.integers(2, size=12) for _ in range(3)]
    perms = [np.array([0, 1]), np.array([1, 0]), np.array([1, 0])]
    xi = np.array([0.2, 0.5, 0.3])
    assert alignment_objective(labels, perms, xi, K=2) == pytest.approx(
        brute_objective(labels, perms, xi, 2), abs=1e-12)


def test_objective_dimension_mismatch():
    with pytest.raises(ValueError):
        alignment_objective([np.zeros(3, int), np.zeros(4, int)], [np.arange(1)] * 2, [0.5, 0.5])
    with pytest.raises(ValueError):
        alignment_objective([np.zeros(3, int)] * 2, [np.arange(1)] * 2, [1.0])


def test_confusion_counts_match_dense_product():
    rng = np.random.default_rng(2)
    a, b = rng.integers(4, size=50), rng.integers(4, size=50)
    np.testing.assert_array_equal(confusion(a, b, 4), one_hot(a, 4).T @ one_hot(b, 4))


# -- permutation update ----------------------------------------------------------


@pytest.mark.parametrize("method", ["procrustes", "assignment"])
def test_update_perm_already_aligned(method):
    lab = np.arange(12) % 3
    perms = [np.arange(3)] * 3
    out = update_perm(1, [lab] * 3, perms, np.full(3, 1 / 3), method=method)
    np.testing.assert_array_equal(out, np.arange(3))


@pytest.mark.parametrize("method", ["procrustes", "assignment"])
def test_update_perm_finds_swap(method):
    lab = np.arange(10) % 2
    out = update_perm(1, [lab, 1 - lab], [np.arange(2)] * 2, [0.5, 0.5], method=method)
    np.testing.assert_array_equal(out, [1, 0])


@pytest.mark.parametrize("seed", range(10))
def test_update_perm_never_decreases_block_objective(seed):
    rng = np.random.default_rng(seed)
    K, L = 3, 3
    labels = [rng.integers(K, size=30) for _ in range(L)]
    perms = [rng.permutation(K) for _ in range(L)]
    xi = rng.dirichlet(np.ones(L))
    before = alignment_objective(labels, perms, xi, K)
    best = max(
        alignment_objective(labels, [np.array(p) if l == 0 else perms[l] for l in range(L)], xi, K)
        for p in itertools.permutations(range(K))
    )
    for method in ("procrustes", "assignment"):
        new = update_perm(0, labels, perms, xi, K=K, method=method)
        after = alignment_objective(labels, [new] + perms[1:], xi, K)
        assert after >= before - 1e-12
        assert after <= best + 1e-12
    exact = update_perm(0, labels, perms, xi, K=K, method="assignment")
    assert alignment_objective(labels, [exact] + perms[1:], xi, K) == pytest.approx(best)


def test_update_perm_rejects_unknown_method():
    lab = np.arange(6) % 2
    with pytest.raises(ValueError):
        update_perm(0, [lab, lab], [np.arange(2)] * 2, [0.5, 0.5], method="greedy")


# -- weight update ---------------------------------------------------------------


def test_update_xi_symmetric_stays_uniform():
    lab = np.arange(20) % 4
    xi = update_xi([lab] * 4, [np.arange(4)] * 4, np.full(4, 0.25), eta=1 / 20)
    np.testing.assert_allclose(xi, 0.25, atol=1e-12)


def test_update_xi_two_layers_converges_to_half():
    rng = np.random.default_rng(1)
    a = rng.integers(3, size=40)
    b = noisy_copies(a, 3, 1, 0.3, 2)[0]
    perms = [np.arange(3)] * 2
    xi = np.array([0.9, 0.1])
    for _ in range(200):
        xi = update_xi([a, b], perms, xi, eta=1 / 40)
        assert xi.min() >= 0 and abs(xi.sum() - 1) <= 1e-10
    np.testing.assert_allclose(xi, [0.5, 0.5], atol=1e-6)


def test_update_xi_rejects_non_positive_step():
    lab = np.arange(4) % 2
    with pytest.raises(ValueError):
        update_xi([lab, lab], [np.arange(2)] * 2, [0.5, 0.5], eta=0)


# -- full alignment --------------------------------------------------------------


def test_consensus_recovers_injected_permutations():
    rng = np.random.default_rng(5)
    K, n = 4, 60
    truth = rng.integers(K, size=n)
    layers = [rng.permutation(K)[truth] for _ in range(5)]
    res = consensus_align(layers, K=K)
    assert misclustering(res.global_labels, truth, K) == 0
    for lab, perm in zip(layers, res.perms):
        # every aligned layer maps onto the same labeling
        np.testing.assert_array_equal(perm[lab], res.global_labels)


def test_consensus_matches_exhaustive_grid_oracle():
    rng = np.random.default_rng(10)
    K, L, n = 2, 3, 10
    truth = rng.integers(K, size=n)
    labels = noisy_copies(truth, K, L, 0.4, 11)
    res = consensus_align(labels, K=K)
    grid = np.arange(0, 1001) / 1000
    best = 0.0
    for combo in itertools.product(itertools.permutations(range(K)), repeat=L):
        perms = [np.array(p) for p in combo]
        for x1 in grid:
            x2 = grid[grid <= 1 - x1 + 1e-12]
            x3 = 1 - x1 - x2
            # objective is quadratic; evaluate vectorised over the x2 slice
            T = np.zeros((3, 3))
            for l in range(3):
                for s in range(3):
                    if l != s:
                        T[l, s] = np.sum(perms[l][labels[l]] == perms[s][labels[s]])
            J = 2 * (T[0, 1] * x1 * x2 + T[0, 2] * x1 * x3 + T[1, 2] * x2 * x3)
            best = max(best, J.max())
    final = alignment_objective(labels, res.perms, res.xi, K)
    assert abs(final - best) <= 1e-3 * best
    assert res.objective_trace[-1] == pytest.approx(final)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), K=st.integers(2, 5), L=st.integers(2, 5))
def test_consensus_objective_trace_non_decreasing(seed, K, L):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(K, 40))
    labels = [rng.integers(K, size=n) for _ in range(L)]
    res = consensus_align(labels, K=K)
    tr = res.objective_trace
    assert all(b >= a - 1e-12 for a, b in zip(tr, tr[1:]))
    assert res.xi.min() >= 0 and abs(res.xi.sum() - 1) <= 1e-10
    np.testing.assert_allclose(res.H.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(res.H, consensus_matrix(labels, res.perms, res.xi, K))
    assert res.iterations <= 200


def test_consensus_invariant_to_global_relabeling():
    rng = np.random.default_rng(3)
    K = 3
    truth = rng.integers(K, size=50)
    labels = noisy_copies(truth, K, 4, 0.2, 4)
    sigma = np.array([2, 0, 1])
    a = consensus_align(labels, K=K).global_labels
    b = consensus_align([sigma[x] for x in labels], K=K).global_labels
    assert misclustering(a, b, K) == 0


def test_consensus_tie_break_smallest_index():
    a = np.array([0, 1])
    b = np.array([1, 0])
    res = consensus_align([a, b], K=2, T_max=1)
    # whichever alignment is chosen, ties in H resolve to the smaller label
    for i in range(2):
        row = res.H[i]
        assert res.global_labels[i] == int(np.flatnonzero(row == row.max())[0])


def test_consensus_empty_input():
    with pytest.raises(ValueError):
        consensus_align([])


def test_alignment_result_json():
    lab = np.arange(6) % 2
    d = consensus_align([lab, lab]).to_dict(include_H=True)
    assert set(d) >= {"xi", "perms", "global_labels", "objective_trace", "H"}

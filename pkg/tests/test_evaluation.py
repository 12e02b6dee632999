import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_force_misclustering
from marscd.evaluation import contingency, misclustering, nmi, nmi_heatmap

labelings = st.integers(1, 30).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 3), min_size=n, max_size=n),
        st.lists(st.integers(0, 3), min_size=n, max_size=n),
    )
)


def test_misclustering_identity_and_swap():
    truth = np.array([0, 0, 1, 1, 2])
    assert misclustering(truth, truth) == 0
    assert misclustering(np.array([1, 2, 0])[truth], truth) == 0


def test_misclustering_two_ninths():
    truth = np.repeat([0, 1, 2], 3)
    est = np.array([0, 0, 0, 1, 1, 2, 2, 2, 0])
    C = contingency(est, truth, 3)
    assert np.trace(C) == 7
    assert misclustering(est, truth, 3) == pytest.approx(2 / 9)
    assert brute_force_misclustering(est, truth, 3) == pytest.approx(2 / 9)


def test_misclustering_length_mismatch():
    with pytest.raises(ValueError):
        misclustering([0, 1], [0, 1, 1])


@settings(max_examples=200, deadline=None)
@given(labelings)
def test_misclustering_matches_exhaustive_and_is_symmetric(pair):
    a, b = map(np.array, pair)
    r = misclustering(a, b, 4)
    assert 0 <= r <= 1
    assert r == pytest.approx(brute_force_misclustering(a, b, 4), abs=1e-12)
    assert r == pytest.approx(misclustering(b, a, 4), abs=1e-12)


def test_nmi_self_and_independent():
    a = np.array([0, 0, 1, 1, 2, 2])
    assert nmi(a, a) == pytest.approx(1.0)
    assert nmi([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-15)


def test_nmi_hand_computation():
    a = [1, 1, 2, 2, 3, 3]
    b = [1, 1, 1, 2, 2, 2]
    # I = (2/3) ln 2, H(a) = ln 3, H(b) = ln 2
    expected = (2 / 3) * math.log(2) / math.sqrt(math.log(3) * math.log(2))
    assert nmi(a, b) == pytest.approx(expected, abs=1e-10)


def test_nmi_degenerate_convention():
    assert nmi([0, 0, 0], [1, 1, 1]) == 1.0
    assert nmi([0, 0, 0], [0, 1, 1]) == 0.0


@settings(max_examples=100, deadline=None)
@given(labelings)
def test_nmi_range_and_symmetry(pair):
    a, b = pair
    v = nmi(a, b)
    assert 0 <= v <= 1
    assert v == pytest.approx(nmi(b, a), abs=1e-12)


def test_heatmap_identical_layers():
    lab = np.arange(12) % 3
    np.testing.assert_allclose(nmi_heatmap([lab] * 3), np.ones((3, 3)))


def test_heatmap_matches_pairwise():
    rng = np.random.default_rng(4)
    labels = [rng.integers(3, size=40) for _ in range(4)]
    M = nmi_heatmap(labels)
    assert M.shape == (4, 4)
    np.testing.assert_array_equal(M, M.T)
    np.testing.assert_array_equal(np.diag(M), 1.0)
    for l in range(4):
        for s in range(4):
            if l != s:
                assert M[l, s] == pytest.approx(nmi(labels[l], labels[s]), abs=1e-12)

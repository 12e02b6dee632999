"""Clustering metrics: misclustering up to permutation and NMI."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .linalg import hungarian_max


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != b.shape:
        raise ValueError(f"label vectors differ in length: {a.size} vs {b.size}")
    return a, b


def contingency(a, b, K: int | None = None) -> np.ndarray:
    a, b = _check_pair(a, b)
    if K is None:
        K = int(max(a.max(initial=0), b.max(initial=0))) + 1
    return np.bincount(a * K + b, minlength=K * K).reshape(K, K)


def misclustering(est, truth, K: int | None = None) -> float:
    """Fraction of nodes mislabeled under the best label permutation."""
    est, truth = _check_pair(est, truth)
    if est.size == 0:
        return 0.0
    C = contingency(est, truth, K)
    perm = hungarian_max(C.astype(float))
    matched = C[np.arange(C.shape[0]), perm].sum()
    return float(1.0 - matched / est.size)


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(a, b) -> float:
    """Normalized mutual information ``I(a;b) / sqrt(H(a) H(b))``.

    If either partition is constant, returns 1 when the two partitions agree
    up to relabeling and 0 otherwise.
    """
    a, b = _check_pair(a, b)
    n = a.size
    if n == 0:
        return 1.0
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    C = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(C, (ai, bi), 1.0)
    ha = _entropy(C.sum(axis=1), n)
    hb = _entropy(C.sum(axis=0), n)
    if ha == 0.0 or hb == 0.0:
        return 1.0 if C.shape[0] == C.shape[1] == 1 else 0.0
    pij = C / n
    outer = np.outer(C.sum(axis=1), C.sum(axis=0)) / n**2
    nz = pij > 0
    mi = float((pij[nz] * np.log(pij[nz] / outer[nz])).sum())
    return float(min(1.0, max(0.0, mi / np.sqrt(ha * hb))))


def nmi_heatmap(labels: Sequence[np.ndarray]) -> np.ndarray:
    """Pairwise NMI between layer labelings (symmetric, unit diagonal)."""
    L = len(labels)
    M = np.eye(L)
    for l in range(L):
        for s in range(l + 1, L):
            M[l, s] = M[s, l] = nmi(labels[l], labels[s])
    return M

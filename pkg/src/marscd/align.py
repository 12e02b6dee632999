"""Consensus label alignment across layers.

Given layer labelings ``Pi_l`` (one-hot, n x K), find permutations ``R_l``
and simplex weights ``xi`` maximizing

    J = sum_{l<s} 2 xi_l xi_s tr(R_l^T Pi_l^T Pi_s R_s)

by block-coordinate ascent. A permutation is stored as a mapping vector
``perm`` with ``R[k, perm[k]] = 1``, so ``Pi_l R_l`` is the one-hot matrix
of the relabeled vector ``perm[labels]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import hungarian_max, project_simplex, svd_truncated


@dataclass
class AlignmentResult:
    xi: np.ndarray
    perms: list[np.ndarray]
    H: np.ndarray = field(repr=False)
    global_labels: np.ndarray
    objective_trace: list[float]
    iterations: int

    def to_dict(self, include_H: bool = False) -> dict:
        out = {
            "xi": self.xi.tolist(),
            "perms": [p.tolist() for p in self.perms],
            "global_labels": self.global_labels.tolist(),
            "objective_trace": list(self.objective_trace),
            "iterations": self.iterations,
        }
        if include_H:
            out["H"] = self.H.tolist()
        return out


def confusion(a: np.ndarray, b: np.ndarray, K: int) -> np.ndarray:
    """``Pi_a^T Pi_b``: ``C[k, k'] = #{i : a_i = k, b_i = k'}``."""
    return np.bincount(a * K + b, minlength=K * K).reshape(K, K).astype(float)


class _Confusions:
    """All pairwise confusion matrices, computed once."""

    def __init__(self, labels: Sequence[np.ndarray], K: int):
        self.K = K
        self.L = len(labels)
        self.C = np.zeros((self.L, self.L, K, K))
        for l in range(self.L):
            for s in range(l, self.L):
                c = confusion(labels[l], labels[s], K)
                self.C[l, s] = c
                self.C[s, l] = c.T

    def traces(self, perms: Sequence[np.ndarray]) -> np.ndarray:
        """``T[l, s] = tr(R_l^T Pi_l^T Pi_s R_s)``; zero on the diagonal."""
        T = np.zeros((self.L, self.L))
        K = self.K
        for l in range(self.L):
            for s in range(l + 1, self.L):
                # count pairs (k, k') with perm_l[k] == perm_s[k']
                inv_s = np.argsort(perms[s])
                match = inv_s[perms[l]]  # k' matched with k
                T[l, s] = T[s, l] = self.C[l, s][np.arange(K), match].sum()
        return T


def _as_label_arrays(labels, K: int | None):
    arrs = [np.asarray(x, dtype=np.int64) for x in labels]
    if not arrs:
        raise ValueError("no labelings given")
    n = arrs[0].size
    if any(a.size != n for a in arrs):
        raise ValueError("all labelings must have the same length")
    if K is None:
        K = int(max(a.max() for a in arrs)) + 1
    return arrs, K


def alignment_objective(labels, perms, xi, K: int | None = None) -> float:
    """``J = sum_{l<s} 2 xi_l xi_s tr(R_l^T Pi_l^T Pi_s R_s)``."""
    arrs, K = _as_label_arrays(labels, K)
    xi = np.asarray(xi, dtype=float)
    if xi.size != len(arrs) or len(perms) != len(arrs):
        raise ValueError("xi, perms and labels must all have length L")
    T = _Confusions(arrs, K).traces(perms)
    return float(xi @ T @ xi)


def _block_score(conf: _Confusions, l: int, perms, xi) -> np.ndarray:
    """``S_l = Pi_l^T H_{-l}`` with ``H_{-l} = sum_{s != l} xi_s Pi_s R_s``."""
    K = conf.K
    S = np.zeros((K, K))
    for s in range(conf.L):
        if s == l:
            continue
        # C_ls R_s: column perm_s[k'] receives column k'
        CR = np.zeros((K, K))
        CR[:, perms[s]] = conf.C[l, s]
        S += xi[s] * CR
    return S


def _perm_update(conf: _Confusions, l: int, perms, xi, method: str) -> np.ndarray:
    S = _block_score(conf, l, perms, xi)
    if method == "procrustes":
        U, _, V = svd_truncated(S, conf.K)
        cand = hungarian_max(U @ V.T)
    elif method == "assignment":
        cand = hungarian_max(S)
    else:
        raise ValueError(f"unknown permutation method {method!r}")
    K = conf.K
    old_val = S[np.arange(K), perms[l]].sum()
    new_val = S[np.arange(K), cand].sum()
    # ties keep the current permutation
    return cand if new_val > old_val else np.asarray(perms[l]).copy()


def update_perm(l: int, labels, perms, xi, K: int | None = None, method: str = "procrustes") -> np.ndarray:
    """New permutation for layer ``l`` with all other blocks held fixed.

    ``method="procrustes"`` takes the SVD ``S_l = U Sigma V^T`` and projects
    ``U V^T`` to the nearest permutation; ``method="assignment"`` solves the
    linear assignment on ``S_l`` directly. The current permutation is kept if
    the candidate would lower the objective.
    """
    arrs, K = _as_label_arrays(labels, K)
    return _perm_update(_Confusions(arrs, K), l, list(perms), np.asarray(xi, float), method)


def _xi_step(T: np.ndarray, xi: np.ndarray, eta: float, max_halvings: int = 20, c: float = 1e-4):
    J0 = float(xi @ T @ xi)
    d = T @ xi
    step = eta
    for _ in range(max_halvings + 1):
        new = project_simplex(xi + 2.0 * step * d)
        J1 = float(new @ T @ new)
        # sufficient ascent (Armijo) along the projected direction
        if J1 >= J0 + c * float(2.0 * d @ (new - xi)):
            return new
        step /= 2.0
    return xi.copy()


def update_xi(labels, perms, xi, eta: float, K: int | None = None) -> np.ndarray:
    """One projected-gradient ascent step on the layer weights, with backtracking."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    arrs, K = _as_label_arrays(labels, K)
    T = _Confusions(arrs, K).traces(perms)
    return _xi_step(T, np.asarray(xi, dtype=float), eta)


def consensus_matrix(labels, perms, xi, K: int) -> np.ndarray:
    n = len(labels[0])
    H = np.zeros((n, K))
    rows = np.arange(n)
    for lab, perm, w in zip(labels, perms, xi):
        H[rows, np.asarray(perm)[lab]] += w
    return H


def consensus_align(
    labels,
    K: int | None = None,
    eta: float | None = None,
    eps: float = 1e-8,
    T_max: int = 200,
    method: str = "procrustes",
) -> AlignmentResult:
    """Block-coordinate ascent over layer permutations and weights.

    Each iteration sweeps ``l = 0..L-1`` updating permutations in place
    (later layers see earlier updates), then takes one weight step. Stops
    when the relative objective change drops below ``eps``. The global label
    of node ``i`` is the smallest ``k`` maximizing ``H[i, k]``.
    """
    arrs, K = _as_label_arrays(labels, K)
    L, n = len(arrs), arrs[0].size
    eta = 1.0 / n if eta is None else eta
    conf = _Confusions(arrs, K)
    xi = np.full(L, 1.0 / L)
    perms = [np.arange(K) for _ in range(L)]
    trace = [float(xi @ conf.traces(perms) @ xi)]
    J_old = -np.inf
    t = 0
    for t in range(1, T_max + 1):
        for l in range(L):
            perms[l] = _perm_update(conf, l, perms, xi, method)
        T = conf.traces(perms)
        xi = _xi_step(T, xi, eta)
        J_new = float(xi @ T @ xi)
        trace.append(J_new)
        if abs(J_new - J_old) / max(1.0, abs(J_old)) < eps:
            break
        J_old = J_new
    H = consensus_matrix(arrs, perms, xi, K)
    return AlignmentResult(xi, perms, H, np.argmax(H, axis=1), trace, t)

"""Covariate construction from auxiliary layers.

For every layer ``s`` the regularized embedding is

    S_s = (D_s + tau I)^{-1} U_s Sigma_s

with ``(U_s, Sigma_s)`` the ``khat`` eigenpairs of largest magnitude. The
covariate matrix of a target layer stacks the embeddings of all other
layers in increasing layer order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import eig_symmetric_topk
from .model import MultilayerNetwork


def default_tau(n: int, mult: float = 10.0) -> float:
    """``mult * log(n)`` (natural log)."""
    return mult * math.log(n)


@dataclass(frozen=True)
class RegularizedEmbedding:
    layer: int
    S: np.ndarray
    tau: float
    khat: int
    eigenvalues: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class CovariateMatrix:
    target_layer: int
    X: np.ndarray
    block_order: tuple[int, ...]


def as_dense_layers(net) -> list[np.ndarray]:
    """Accept a :class:`MultilayerNetwork` or a sequence of square arrays."""
    if isinstance(net, MultilayerNetwork):
        return net.dense_layers()
    return [np.asarray(A, dtype=float) for A in net]


def regularized_embedding(
    A: np.ndarray,
    khat: int,
    tau: float,
    layer: int = 0,
    eigs: tuple[np.ndarray, np.ndarray] | None = None,
) -> RegularizedEmbedding:
    """Degree-regularized, eigenvalue-weighted spectral embedding of one layer.

    ``A`` may be any symmetric matrix (an expectation matrix works too);
    degrees are its row sums. ``eigs`` optionally supplies precomputed
    top-k eigenpairs (``k >= khat``) from :func:`eig_symmetric_topk`.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if not 1 <= khat <= n:
        raise ValueError(f"khat must be in [1, {n}], got {khat}")
    if eigs is None or eigs[0].size < khat:
        vals, vecs = eig_symmetric_topk(A, khat)
    else:
        vals, vecs = eigs[0][:khat], eigs[1][:, :khat]
    deg = A.sum(axis=1)
    S = (vecs * vals) / (deg + tau)[:, None]
    return RegularizedEmbedding(layer, S, float(tau), khat, vals)


class EmbeddingCache:
    """Write-once store of per-layer embeddings for fixed ``(khat, tau)``.

    Each layer is decomposed at most once; later requests return the same
    array object.
    """

    def __init__(self, layers: Sequence[np.ndarray], khat: int, tau: float, eigs=None):
        self.layers = list(layers)
        self.khat = khat
        self.tau = tau
        self.eigs = eigs
        self._store: dict[int, RegularizedEmbedding] = {}

    def __len__(self) -> int:
        return len(self.layers)

    def get(self, s: int) -> RegularizedEmbedding:
        emb = self._store.get(s)
        if emb is None:
            eigs = None if self.eigs is None else self.eigs[s]
            emb = regularized_embedding(self.layers[s], self.khat, self.tau, layer=s, eigs=eigs)
            emb.S.setflags(write=False)
            self._store[s] = emb
        return emb

    def fill(self) -> "EmbeddingCache":
        for s in range(len(self.layers)):
            self.get(s)
        return self

    def replace(self, s: int, S: np.ndarray) -> None:
        """Override one stored embedding (used to inject sign flips in tests)."""
        old = self.get(s)
        self._store[s] = RegularizedEmbedding(s, np.asarray(S), old.tau, old.khat, old.eigenvalues)


def build_covariates(
    net,
    target: int,
    khat: int,
    tau: float,
    cache: EmbeddingCache | None = None,
) -> CovariateMatrix:
    """Stack the embeddings of every layer except ``target``."""
    if cache is None:
        cache = EmbeddingCache(as_dense_layers(net), khat, tau)
    L = len(cache)
    if L < 2:
        raise ValueError("need at least two layers to build covariates")
    if not 0 <= target < L:
        raise ValueError(f"target layer {target} out of range")
    order = tuple(s for s in range(L) if s != target)
    X = np.hstack([cache.get(s).S for s in order])
    return CovariateMatrix(target, X, order)

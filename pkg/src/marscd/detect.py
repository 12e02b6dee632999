"""Layer-specific community detection (MARS-CD) and single-layer baselines."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .linalg import eig_symmetric_topk, kmeans, svd_truncated
from .mars import CovariateMatrix, EmbeddingCache, as_dense_layers, build_covariates, default_tau
from .model import derive_seed


@dataclass(frozen=True)
class NacWeights:
    layer: int
    beta: np.ndarray
    dbar: float


@dataclass
class DetectionResult:
    layer: int
    labels: np.ndarray
    embedding: np.ndarray = field(repr=False)
    singulars: np.ndarray
    K: int
    khat: int
    tau: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "layer": self.layer,
            "labels": self.labels.tolist(),
            "singulars": self.singulars.tolist(),
            "config": {"K": self.K, "khat": self.khat, "tau": self.tau, "seed": self.seed},
        }


def nac_weights(A: np.ndarray, layer: int = 0) -> NacWeights:
    """Node-wise balance weights ``beta_i = (dbar/2) / (d_i / log n + 1)``."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n < 2:
        raise ValueError("need n >= 2 so that log n > 0")
    d = A.sum(axis=1)
    dbar = float(d.mean())
    beta = (dbar / 2.0) / (d / math.log(n) + 1.0)
    return NacWeights(layer, beta, dbar)


def nac_combine(A: np.ndarray, X) -> np.ndarray:
    """Network-adjusted covariates ``Y = A X + diag(beta) X``."""
    A = np.asarray(A, dtype=float)
    if isinstance(X, CovariateMatrix):
        X = X.X
    X = np.asarray(X, dtype=float)
    if X.shape[0] != A.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows, network has {A.shape[0]} nodes")
    w = nac_weights(A)
    return A @ X + w.beta[:, None] * X


def normalize_rows(M: np.ndarray) -> np.ndarray:
    """Scale every nonzero row to unit norm; zero rows stay zero."""
    norms = np.linalg.norm(M, axis=1)
    out = np.zeros_like(M)
    nz = norms > 0
    out[nz] = M[nz] / norms[nz, None]
    return out


def mars_cd_layer(
    net,
    target: int,
    K: int,
    khat: int | None = None,
    tau: float | None = None,
    seed: int = 0,
    cache: EmbeddingCache | None = None,
    restarts: int = 20,
) -> DetectionResult:
    """MARS-CD labels for one target layer.

    ``net`` is a :class:`MultilayerNetwork` or a list of dense matrices.
    Pass ``cache`` to reuse the per-layer embeddings across targets.
    """
    layers = cache.layers if cache is not None else as_dense_layers(net)
    n = layers[0].shape[0]
    if n < K:
        raise ValueError(f"need n >= K, got n={n}, K={K}")
    khat = K if khat is None else khat
    tau = default_tau(n) if tau is None else tau
    if cache is None:
        cache = EmbeddingCache(layers, khat, tau)
    X = build_covariates(None, target, khat, tau, cache=cache)
    Y = nac_combine(layers[target], X)
    U, s, _ = svd_truncated(Y, K)
    emb = normalize_rows(U)
    labels = kmeans(emb, K, seed=seed, restarts=restarts)
    return DetectionResult(target, labels, emb, s, K, cache.khat, cache.tau, seed)


def mars_cd_all(
    net,
    K: int,
    khat: int | None = None,
    tau: float | None = None,
    seed: int = 0,
    cache: EmbeddingCache | None = None,
    restarts: int = 20,
    threads: int = 1,
) -> list[DetectionResult]:
    """Run :func:`mars_cd_layer` on every layer with seeds ``derive_seed(seed, l)``."""
    if cache is None:
        layers = as_dense_layers(net)
        n = layers[0].shape[0]
        cache = EmbeddingCache(
            layers, K if khat is None else khat, default_tau(n) if tau is None else tau
        )
    cache.fill()

    def one(l):
        return mars_cd_layer(None, l, K, seed=derive_seed(seed, l), cache=cache, restarts=restarts)

    L = len(cache)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(one, range(L)))
    return [one(l) for l in range(L)]


def baseline_spec(A: np.ndarray, K: int, seed: int = 0, eigs=None, restarts: int = 20) -> np.ndarray:
    """Spectral clustering: k-means on the rows of the top-``K`` eigenvectors."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n < K:
        raise ValueError(f"need n >= K, got n={n}, K={K}")
    if K == 1:
        return np.zeros(n, dtype=np.intp)
    _, vecs = eigs if eigs is not None else eig_symmetric_topk(A, K)
    return kmeans(vecs[:, :K], K, seed=seed, restarts=restarts)


def score_ratios(vecs: np.ndarray, K: int, n: int) -> np.ndarray:
    """Entry-wise ratios ``u_k / u_1`` (k = 2..K), clipped to ``[-log n, log n]``.

    Rows whose leading entry is below ``1e-12`` in magnitude are set to zero.
    """
    u1 = vecs[:, 0]
    ok = np.abs(u1) >= 1e-12
    R = np.zeros((vecs.shape[0], K - 1))
    R[ok] = vecs[ok, 1:K] / u1[ok, None]
    bound = math.log(n)
    return np.clip(R, -bound, bound)


def baseline_score(A: np.ndarray, K: int, seed: int = 0, eigs=None, restarts: int = 20) -> np.ndarray:
    """SCORE: k-means on leading-eigenvector entry ratios."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n < K:
        raise ValueError(f"need n >= K, got n={n}, K={K}")
    if K == 1:
        return np.zeros(n, dtype=np.intp)
    _, vecs = eigs if eigs is not None else eig_symmetric_topk(A, K)
    return kmeans(score_ratios(vecs, K, n), K, seed=seed, restarts=restarts)

"""Multilayer network container and the two simulation designs.

Labels are 0-based (``0..K-1``) throughout the library.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

__all__ = [
    "MultilayerNetwork",
    "LayerLabels",
    "DcsbmParams",
    "SparsityClass",
    "SparsityReport",
    "derive_seed",
    "transition_labels",
    "expected_adjacency",
    "sample_mdcsbm",
    "make_exp2_params",
    "make_exp1_network",
    "cosine_similarity",
    "classify_sparsity",
]


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 63-bit child seed for ``(seed, *keys)``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class MultilayerNetwork:
    """``L`` undirected simple graphs on a shared node set ``0..n-1``.

    Each layer is stored as an ``(m, 2)`` integer array of edges ``(i, j)``
    with ``i < j``, sorted lexicographically and duplicate-free.
    """

    n: int
    edges: tuple[np.ndarray, ...]
    degrees: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("network needs at least one node")
        cleaned, degs = [], []
        for e in self.edges:
            e = np.asarray(e, dtype=np.int64).reshape(-1, 2)
            if e.size and (e.min() < 0 or e.max() >= self.n):
                raise ValueError("edge endpoint out of range")
            e = np.sort(e, axis=1)
            e = e[e[:, 0] != e[:, 1]]
            e = np.unique(e, axis=0)
            e.setflags(write=False)
            d = np.bincount(e.ravel(), minlength=self.n)
            d.setflags(write=False)
            cleaned.append(e)
            degs.append(d)
        object.__setattr__(self, "edges", tuple(cleaned))
        object.__setattr__(self, "degrees", tuple(degs))

    @property
    def L(self) -> int:
        return len(self.edges)

    def adjacency(self, layer: int) -> np.ndarray:
        """Dense symmetric 0/1 adjacency matrix of ``layer``."""
        A = np.zeros((self.n, self.n))
        e = self.edges[layer]
        A[e[:, 0], e[:, 1]] = 1.0
        A[e[:, 1], e[:, 0]] = 1.0
        return A

    def dense_layers(self) -> list[np.ndarray]:
        return [self.adjacency(l) for l in range(self.L)]

    @classmethod
    def from_dense(cls, layers: Sequence[np.ndarray]) -> "MultilayerNetwork":
        layers = [np.asarray(A) for A in layers]
        n = layers[0].shape[0]
        edges = []
        for A in layers:
            if A.shape != (n, n):
                raise ValueError("all layers must be n x n")
            if not np.array_equal(A, A.T):
                raise ValueError("adjacency must be symmetric")
            if np.any((A != 0) & (A != 1)):
                raise ValueError("adjacency must be binary")
            i, j = np.nonzero(np.triu(A, 1))
            edges.append(np.column_stack([i, j]))
        return cls(n, tuple(edges))

    def subnetwork(self, nodes: np.ndarray, layers: Sequence[int] | None = None) -> "MultilayerNetwork":
        """Induced subnetwork on ``nodes`` (renumbered in the given order)."""
        nodes = np.asarray(nodes, dtype=np.int64)
        remap = np.full(self.n, -1, dtype=np.int64)
        remap[nodes] = np.arange(nodes.size)
        layers = range(self.L) if layers is None else layers
        out = []
        for l in layers:
            e = remap[self.edges[l]]
            out.append(e[(e >= 0).all(axis=1)])
        return MultilayerNetwork(int(nodes.size), tuple(out))

    def __eq__(self, other):
        if not isinstance(other, MultilayerNetwork):
            return NotImplemented
        return self.n == other.n and self.L == other.L and all(
            np.array_equal(a, b) for a, b in zip(self.edges, other.edges)
        )

    __hash__ = None


@dataclass
class LayerLabels:
    """Per-layer community labels, array of shape ``(L, n)`` in ``0..K-1``."""

    K: int
    labels: np.ndarray
    global_labels: np.ndarray | None = None

    def __post_init__(self):
        self.labels = np.atleast_2d(np.asarray(self.labels, dtype=np.int64))
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.K):
            raise ValueError(f"labels must lie in 0..{self.K - 1}")
        if self.global_labels is not None:
            self.global_labels = np.asarray(self.global_labels, dtype=np.int64)

    @property
    def L(self) -> int:
        return self.labels.shape[0]

    def membership(self, layer: int) -> np.ndarray:
        """One-hot ``n x K`` membership matrix of ``layer``."""
        return np.eye(self.K)[self.labels[layer]]


@dataclass
class DcsbmParams:
    """Multi-DCSBM parameters.

    ``theta`` has shape ``(L, n)``, ``B`` shape ``(L, K, K)``. ``theta_roles``
    records, per layer, the community order used to assign degree ranges
    (see :func:`make_exp2_params`); it is informational only.
    """

    theta: np.ndarray
    B: np.ndarray
    labels: LayerLabels
    q1: float = 0.0
    global_labels: np.ndarray | None = None
    theta_roles: np.ndarray | None = None

    def __post_init__(self):
        self.theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        self.B = np.asarray(self.B, dtype=float)
        if self.B.ndim == 2:
            self.B = np.broadcast_to(self.B, (self.theta.shape[0],) + self.B.shape).copy()
        L, n = self.theta.shape
        K = self.labels.K
        if self.B.shape != (L, K, K):
            raise ValueError(f"B must have shape {(L, K, K)}, got {self.B.shape}")
        if self.labels.labels.shape != (L, n):
            raise ValueError("labels shape does not match theta")
        if np.any(self.theta < 0):
            raise ValueError("theta must be nonnegative")
        if np.any(self.B < 0) or np.any(self.B > 1) or not np.allclose(self.B, self.B.transpose(0, 2, 1)):
            raise ValueError("each B must be symmetric with entries in [0, 1]")
        if not 0 <= self.q1 <= 1:
            raise ValueError("q1 must lie in [0, 1]")
        for l in range(L):
            peak = 0.0
            for k in range(K):
                tk = self.theta[l, self.labels.labels[l] == k]
                for k2 in range(K):
                    tk2 = self.theta[l, self.labels.labels[l] == k2]
                    if tk.size and tk2.size:
                        peak = max(peak, tk.max() * tk2.max() * self.B[l, k, k2])
            if peak > 1 + 1e-12:
                raise ValueError(f"layer {l}: edge probability {peak:.3g} exceeds 1")

    @property
    def L(self) -> int:
        return self.theta.shape[0]

    @property
    def n(self) -> int:
        return self.theta.shape[1]

    @property
    def K(self) -> int:
        return self.labels.K

    def to_dict(self) -> dict:
        out = {
            "theta": self.theta.tolist(),
            "B": self.B.tolist(),
            "K": self.K,
            "labels": self.labels.labels.tolist(),
            "q1": self.q1,
        }
        if self.global_labels is not None:
            out["global_labels"] = np.asarray(self.global_labels).tolist()
        if self.theta_roles is not None:
            out["theta_roles"] = np.asarray(self.theta_roles).tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "DcsbmParams":
        g = d.get("global_labels")
        return cls(
            theta=np.asarray(d["theta"]),
            B=np.asarray(d["B"]),
            labels=LayerLabels(int(d["K"]), np.asarray(d["labels"]), g),
            q1=float(d.get("q1", 0.0)),
            global_labels=None if g is None else np.asarray(g),
            theta_roles=None if d.get("theta_roles") is None else np.asarray(d["theta_roles"]),
        )


def transition_labels(global_labels: np.ndarray, K: int, q1: float, L: int, seed: int) -> LayerLabels:
    """Layer labels obtained by independent per-node transitions.

    Each node keeps its global label with probability ``1 - q1`` and
    otherwise moves to one of the other ``K - 1`` labels uniformly.
    """
    if not 0 <= q1 <= 1:
        raise ValueError("q1 must lie in [0, 1]")
    if K < 2 and q1 > 0:
        raise ValueError("transitions need K >= 2")
    g = np.asarray(global_labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    n = g.size
    out = np.empty((L, n), dtype=np.int64)
    for l in range(L):
        move = rng.random(n) < q1
        shift = rng.integers(1, max(K, 2), size=n)
        out[l] = np.where(move, (g + shift) % K, g)
    return LayerLabels(K, out, g)


def expected_adjacency(params: DcsbmParams, layer: int) -> np.ndarray:
    """Edge-probability matrix ``Theta Pi B Pi^T Theta`` with zero diagonal."""
    th = params.theta[layer]
    lab = params.labels.labels[layer]
    P = np.outer(th, th) * params.B[layer][np.ix_(lab, lab)]
    np.fill_diagonal(P, 0.0)
    return P


def sample_mdcsbm(params: DcsbmParams, seed: int) -> MultilayerNetwork:
    """Draw one multilayer network from the Multi-DCSBM.

    Layer ``l`` consumes one uniform per pair ``i < j`` (row-major order)
    from ``default_rng(derive_seed(seed, l))``.
    """
    n = params.n
    iu, ju = np.triu_indices(n, 1)
    edges = []
    for l in range(params.L):
        P = expected_adjacency(params, l)[iu, ju]
        if np.any(P < 0) or np.any(P > 1):
            raise ValueError("edge probability outside [0, 1]")
        rng = np.random.default_rng(derive_seed(seed, l))
        keep = rng.random(iu.size) < P
        edges.append(np.column_stack([iu[keep], ju[keep]]))
    return MultilayerNetwork(n, tuple(edges))


def _exp2_block_templates(K: int) -> list[np.ndarray]:
    I, J = np.eye(K), np.ones((K, K))
    return [
        0.9 * I + 0.1 * J,
        0.7 * I + 0.3 * J,
        0.5 * I + 0.05 * (J - I),
        0.05 * I + 0.5 * (J - I),
    ]


# (low, high) uniform ranges for theta: dense, sparse, medium
_THETA_DENSE = (0.10, 0.50)
_THETA_SPARSE = (0.05, 0.20)
_THETA_MEDIUM = (0.15, 0.25)


def make_exp2_params(n: int = 1000, K: int = 4, L: int = 4, q1: float = 0.1, seed: int = 0) -> DcsbmParams:
    """Experiment-2 Multi-DCSBM parameters.

    With ``K = L = 4`` this is the published design. Other sizes cycle the
    four block templates over layers and split communities into
    ``ceil(K/2)`` dense ones, one sparse one, and the rest medium.
    """
    if n < K or K < 2 or L < 1:
        raise ValueError(f"invalid dimensions n={n}, K={K}, L={L}")
    rng = np.random.default_rng(seed)
    g = rng.integers(K, size=n)
    labels = transition_labels(g, K, q1, L, derive_seed(seed, 1))
    templates = _exp2_block_templates(K)
    B = np.stack([templates[l % 4] for l in range(L)])

    n_dense = math.ceil(K / 2)
    ranges = [_THETA_DENSE] * n_dense + [_THETA_SPARSE] + [_THETA_MEDIUM] * (K - n_dense - 1)
    ranges = ranges[:K]
    theta = np.empty((L, n))
    roles = np.empty((L, K), dtype=np.int64)
    trng = np.random.default_rng(derive_seed(seed, 2))
    for l in range(L):
        order = trng.permutation(K)  # order[r] is the community given range r
        roles[l] = order
        lo = np.empty(K)
        hi = np.empty(K)
        for r, k in enumerate(order):
            lo[k], hi[k] = ranges[r]
        lab = labels.labels[l]
        theta[l] = trng.uniform(lo[lab], hi[lab])
    return DcsbmParams(theta, B, labels, q1=q1, global_labels=g, theta_roles=roles)


def cosine_similarity(Z: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(Z, axis=1)
    norms[norms == 0] = 1.0
    U = Z / norms[:, None]
    return U @ U.T


def top_fraction_graph(C: np.ndarray, dense_frac: float) -> np.ndarray:
    """Edges ``(i, j)``, ``i < j``, of the largest ``floor(frac * n(n-1)/2)`` entries.

    Ties are broken in favor of the lexicographically smaller pair.
    """
    n = C.shape[0]
    iu, ju = np.triu_indices(n, 1)
    m = int(math.floor(dense_frac * n * (n - 1) / 2))
    vals = C[iu, ju]
    # stable sort keeps row-major (lexicographic) order among equal values
    order = np.argsort(-vals, kind="stable")[:m]
    order.sort()
    return np.column_stack([iu[order], ju[order]])


def make_exp1_network(
    n: int = 1000,
    p: int = 20,
    K: int = 4,
    L: int = 5,
    q1: float = 0.1,
    sigma_M: float = 5.0,
    dense_frac: float = 0.08,
    seed: int = 0,
) -> tuple[MultilayerNetwork, LayerLabels]:
    """Covariate-induced multilayer network (Experiment 1).

    Returns the network and the layer labels; ``labels.global_labels`` holds
    the global labels.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if not 0 < dense_frac < 1:
        raise ValueError("dense_frac must lie in (0, 1)")
    if n < K:
        raise ValueError("need n >= K")
    rng = np.random.default_rng(seed)
    g = rng.integers(K, size=n)
    mu0 = rng.normal(0.0, sigma_M, size=(K, p))
    labels = transition_labels(g, K, q1, L, derive_seed(seed, 1))
    edges = []
    for l in range(L):
        lrng = np.random.default_rng(derive_seed(seed, 2, l))
        strong = lrng.random(K) < 0.3
        mu = np.where(strong[:, None], mu0, 0.2 * mu0)
        lab = labels.labels[l]
        Z = mu[lab] + lrng.standard_normal((n, p))
        edges.append(top_fraction_graph(cosine_similarity(Z), dense_frac))
    return MultilayerNetwork(n, tuple(edges)), labels


class SparsityClass(str, Enum):
    RELATIVELY_SPARSE = "RelativelySparse"
    EXTREMELY_SPARSE = "ExtremelySparse"
    INTERMEDIATE = "Intermediate"


@dataclass
class SparsityReport:
    """Per (layer, community) sparsity class and expected-degree range."""

    classes: list[list[SparsityClass]]
    min_degree: np.ndarray
    max_degree: np.ndarray
    c_d: float
    n: int
    theta_roles: np.ndarray | None = None

    @property
    def dense_threshold(self) -> float:
        return self.c_d * math.log(self.n)

    @property
    def extreme_threshold(self) -> float:
        return 0.1 * math.log(self.n)


def expected_degrees(params: DcsbmParams, layer: int) -> np.ndarray:
    """``E[d_i]`` computed from community sums, without forming the n x n matrix."""
    th = params.theta[layer]
    lab = params.labels.labels[layer]
    B = params.B[layer]
    mass = np.bincount(lab, weights=th, minlength=params.K)  # sum of theta per community
    a = B @ mass  # a[k] = sum_j theta_j B[k, pi(j)]
    return th * a[lab] - th**2 * B[lab, lab]


def classify_sparsity(params: DcsbmParams, c_d: float = 1.0) -> SparsityReport:
    """Classify every community in every layer by its expected degrees.

    A community is relatively sparse when its smallest expected degree is at
    least ``c_d log n``, extremely sparse when its largest expected degree is
    at most ``0.1 log n``, and intermediate otherwise. Communities without
    members are reported as extremely sparse with zero degrees.
    """
    n, K, L = params.n, params.K, params.L
    hi_thr = c_d * math.log(n)
    lo_thr = 0.1 * math.log(n)
    mins = np.zeros((L, K))
    maxs = np.zeros((L, K))
    classes = []
    for l in range(L):
        ed = expected_degrees(params, l)
        lab = params.labels.labels[l]
        row = []
        for k in range(K):
            dk = ed[lab == k]
            if dk.size:
                mins[l, k], maxs[l, k] = dk.min(), dk.max()
            if dk.size and mins[l, k] >= hi_thr:
                row.append(SparsityClass.RELATIVELY_SPARSE)
            elif maxs[l, k] <= lo_thr:
                row.append(SparsityClass.EXTREMELY_SPARSE)
            else:
                row.append(SparsityClass.INTERMEDIATE)
        classes.append(row)
    return SparsityReport(classes, mins, maxs, c_d, n, params.theta_roles)

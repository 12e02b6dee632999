"""Dense numerical kernels shared by the detection and alignment code.

Everything here is a deterministic function of its inputs (plus an explicit
seed for k-means). Eigen- and singular vectors follow one sign convention:
the first coordinate whose magnitude exceeds ``SIGN_TOL`` is made positive.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment

SIGN_TOL = 1e-12
SYMMETRY_TOL = 1e-10
# exhaustive enumeration (exact lexicographic tie-break) up to this K
_EXHAUSTIVE_MAX_K = 7


def _first_nonzero_index(vectors: np.ndarray) -> np.ndarray:
    """Index of the first entry with ``|x| > SIGN_TOL`` in each column."""
    mask = np.abs(vectors) > SIGN_TOL
    idx = np.argmax(mask, axis=0)
    # all-zero columns: argmax returns 0, which is harmless
    return idx


def fix_signs(vectors: np.ndarray, *others: np.ndarray):
    """Flip columns so that each column's first nonzero entry is positive.

    The same flips are applied to every array in ``others`` (e.g. the right
    singular vectors). Returns the flipped arrays.
    """
    idx = _first_nonzero_index(vectors)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    out = [vectors * signs]
    out.extend(o * signs for o in others)
    return out[0] if not others else tuple(out)


def eig_symmetric_topk(A: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-``k`` eigenpairs of a symmetric matrix by eigenvalue magnitude.

    Parameters
    ----------
    A : ndarray of shape (n, n)
        Symmetric real matrix.
    k : int
        Number of eigenpairs, ``1 <= k <= n``.

    Returns
    -------
    values : ndarray of shape (k,)
        Eigenvalues ordered by descending ``|lambda|``. Among equal
        magnitudes, positive values come first, then the eigenvector whose
        first nonzero coordinate has the smallest index.
    vectors : ndarray of shape (n, k)
        Orthonormal eigenvectors (columns), sign-normalized.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if np.max(np.abs(A - A.T), initial=0.0) > SYMMETRY_TOL:
        raise ValueError("matrix is not symmetric")

    values, vectors = np.linalg.eigh(A)
    vectors = fix_signs(vectors)
    first = _first_nonzero_index(vectors)
    mags = np.round(np.abs(values), 12)
    # lexsort: last key is primary
    order = np.lexsort((first, values < 0, -mags))
    order = order[:k]
    return values[order], vectors[:, order]


def svd_truncated(M: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top-``k`` singular triplets ``(U, s, V)`` with ``M ~ U diag(s) V.T``.

    Signs follow the left singular vectors' first-nonzero convention.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {M.shape}")
    if not 1 <= k <= min(M.shape):
        raise ValueError(f"k must be in [1, {min(M.shape)}], got {k}")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    U, V = fix_signs(U[:, :k], Vt[:k].T)
    return U, s[:k], V


@lru_cache(maxsize=None)
def _all_permutations(K: int) -> np.ndarray:
    # itertools yields permutations in lexicographic order
    return np.array(list(itertools.permutations(range(K))), dtype=np.intp).reshape(-1, K)


def hungarian_max(score: np.ndarray) -> np.ndarray:
    """Permutation maximizing ``sum_k score[k, perm[k]]``.

    The returned mapping vector ``perm`` represents the 0/1 matrix ``R`` with
    ``R[k, perm[k]] = 1``, so the maximized quantity is ``tr(R.T @ score)``.
    For ``K <= 7`` all permutations are enumerated and the lexicographically
    smallest maximizer is returned; larger problems go through
    :func:`scipy.optimize.linear_sum_assignment`.
    """
    score = np.asarray(score, dtype=float)
    if score.ndim != 2 or score.shape[0] != score.shape[1]:
        raise ValueError(f"score must be square, got shape {score.shape}")
    if not np.all(np.isfinite(score)):
        raise ValueError("score has non-finite entries")
    K = score.shape[0]
    if K == 0:
        return np.zeros(0, dtype=np.intp)
    if K <= _EXHAUSTIVE_MAX_K:
        perms = _all_permutations(K)
        totals = score[np.arange(K), perms].sum(axis=1)
        best = totals.max()
        tol = 1e-12 * max(1.0, abs(best))
        return perms[np.flatnonzero(totals >= best - tol)[0]].copy()
    rows, cols = linear_sum_assignment(score, maximize=True)
    perm = np.empty(K, dtype=np.intp)
    perm[rows] = cols
    return perm


def permutation_matrix(perm: np.ndarray) -> np.ndarray:
    """0/1 matrix ``R`` with ``R[k, perm[k]] = 1``."""
    perm = np.asarray(perm)
    R = np.zeros((perm.size, perm.size))
    R[np.arange(perm.size), perm] = 1.0
    return R


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of ``v`` onto the probability simplex."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("cannot project an empty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / ind > 0)[-1]
    theta = css[rho] / (rho + 1)
    w = np.maximum(v - theta, 0.0)
    # absorb rounding so the weights sum to one
    w /= w.sum()
    return w


def _kmeanspp_init(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((K, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, K):
        total = d2.sum()
        if total <= 0:
            # fewer distinct points than K; pick uniformly
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers[j] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))
    return centers


def _sq_dists(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d = (
        np.sum(X**2, axis=1)[:, None]
        - 2.0 * X @ centers.T
        + np.sum(centers**2, axis=1)[None, :]
    )
    return np.maximum(d, 0.0)


def lloyd(
    X: np.ndarray, centers: np.ndarray, max_iters: int = 100
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Run Lloyd iterations from the given centers.

    Returns ``(labels, centers, trace)`` where ``trace`` holds the
    within-cluster sum of squares after every assignment step.
    """
    n, K = X.shape[0], centers.shape[0]
    centers = centers.copy()
    labels = None
    trace: list[float] = []
    for _ in range(max_iters):
        d = _sq_dists(X, centers)
        new = np.argmin(d, axis=1)
        # repair empty clusters with the point farthest from its center
        counts = np.bincount(new, minlength=K)
        for j in np.flatnonzero(counts == 0):
            own = d[np.arange(n), new]
            own[counts[new] <= 1] = -1.0  # never empty another cluster
            far = int(np.argmax(own))
            counts[new[far]] -= 1
            new[far] = j
            counts[j] = 1
            centers[j] = X[far]
            d[far] = _sq_dists(X[far : far + 1], centers)[0]
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for j in range(K):
            centers[j] = X[labels == j].mean(axis=0)
        trace.append(float(np.sum((X - centers[labels]) ** 2)))
    return labels, centers, trace


def kmeans(
    X: np.ndarray,
    K: int,
    seed: int = 0,
    restarts: int = 20,
    max_iters: int = 100,
) -> np.ndarray:
    """k-means++ seeded Lloyd's algorithm with restarts.

    Restart ``r`` uses ``numpy.random.default_rng(seed + r)``; the labeling
    with the smallest within-cluster sum of squares wins (earliest restart on
    ties). Labels are in ``0..K-1``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if K < 1 or n < K:
        raise ValueError(f"need n >= K >= 1, got n={n}, K={K}")
    if not np.all(np.isfinite(X)):
        raise ValueError("points have non-finite entries")
    if K == 1:
        return np.zeros(n, dtype=np.intp)
    best_labels, best_obj = None, np.inf
    for r in range(max(1, restarts)):
        rng = np.random.default_rng(seed + r)
        centers = _kmeanspp_init(X, K, rng)
        labels, centers, _ = lloyd(X, centers, max_iters)
        obj = float(np.sum((X - centers[labels]) ** 2))
        if best_labels is None or obj < best_obj - 1e-12 * max(1.0, best_obj):
            best_obj, best_labels = obj, labels
    return best_labels.astype(np.intp)

"""Coefficients -> affinity -> normalized spectral clustering.

The tail of every pipeline, deep or classical: normalize the coefficient
columns, symmetrize into an affinity W = |C| + |C^T|, build the normalized
Laplacian L = I - D^(-1/2) W D^(-1/2), embed each sample in the K
smallest-eigenvalue eigenvectors, unit-normalize the rows, and k-means them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ClusterLabeling:
    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise ValueError(f"labels must be 1-D, got shape {labels.shape}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise ValueError(f"labels must lie in [0, {self.k})")
        object.__setattr__(self, "labels", labels.astype(np.int64))


def normalize_coefficients(coeffs):
    """Scale each column to unit infinity norm; zero columns pass through."""
    c = np.array(coeffs, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError(f"coefficient matrix must be square, got {c.shape}")
    scale = np.abs(c).max(axis=0)
    nonzero = scale > 0
    c[:, nonzero] /= scale[nonzero]
    return c


def build_affinity(coeffs):
    """W = |C| + |C^T|: symmetric and entrywise nonnegative by construction."""
    c = np.asarray(coeffs, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError(f"coefficient matrix must be square, got {c.shape}")
    return np.abs(c) + np.abs(c.T)


def symmetric_eig(a):
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got {a.shape}")
    if not np.allclose(a, a.T, atol=1e-10):
        raise ValueError("matrix is not symmetric")
    return np.linalg.eigh(a)


def normalized_laplacian(w):
    """L = I - D^(-1/2) W D^(-1/2); zero-degree nodes get D^(-1/2) = 0."""
    w = np.asarray(w, dtype=np.float64)
    deg = w.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    pos = deg > 0
    inv_sqrt[pos] = 1.0 / np.sqrt(deg[pos])
    lap = -w * inv_sqrt[:, None] * inv_sqrt[None, :]
    np.fill_diagonal(lap, np.diag(lap) + 1.0)
    return (lap + lap.T) / 2.0  # scrub rounding asymmetry


def kmeans(rows, k, seed=0, restarts=20, max_iter=300, tol=1e-8):
    """Lloyd's algorithm with k-means++ seeding and seeded restarts.

    Empty clusters are reseeded from the point farthest from its centroid.
    Returns the labeling of the best restart by within-cluster sum of
    squares. Deterministic for a fixed (rows, k, seed).
    """
    rows = np.asarray(rows, dtype=np.float64)
    n = rows.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if k == 1:
        return ClusterLabeling(np.zeros(n, dtype=np.int64), 1)
    rng = np.random.default_rng(seed)
    best_labels, best_inertia = None, np.inf
    for _ in range(restarts):
        centers = _kmeanspp(rows, k, rng)
        labels = None
        for _ in range(max_iter):
            d2 = _sqdist(rows, centers)
            labels = d2.argmin(axis=1)
            new_centers = np.empty_like(centers)
            for c in range(k):
                members = rows[labels == c]
                if len(members) == 0:
                    worst = int(np.argmax(d2[np.arange(n), labels]))
                    new_centers[c] = rows[worst]
                else:
                    new_centers[c] = members.mean(axis=0)
            shift = float(np.abs(new_centers - centers).max())
            centers = new_centers
            if shift <= tol:
                break
        d2 = _sqdist(rows, centers)
        labels = d2.argmin(axis=1)
        inertia = float(d2[np.arange(n), labels].sum())
        if inertia < best_inertia - 1e-12:
            best_inertia, best_labels = inertia, labels
    return ClusterLabeling(best_labels.astype(np.int64), k)


def spectral_cluster(w, k, seed=0):
    """Ng-style normalized spectral clustering of an affinity matrix."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"affinity must be square, got {w.shape}")
    if not np.allclose(w, w.T, atol=1e-10):
        raise ValueError("affinity must be symmetric")
    if w.min() < 0:
        raise ValueError("affinity must be nonnegative")
    n = w.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    lap = normalized_laplacian(w)
    _, vecs = symmetric_eig(lap)
    emb = vecs[:, :k]
    norms = np.linalg.norm(emb, axis=1)
    emb = emb / np.where(norms > 0, norms, 1.0)[:, None]
    return kmeans(emb, k, seed=seed)


def heatmap_image(w, order=None):
    """Render an affinity as an 8-bit grayscale image via min-max scaling.

    `order` permutes rows and columns first (pass argsort of the true labels
    to make block structure visible). A constant matrix renders as zeros.
    """
    w = np.asarray(w, dtype=np.float64)
    if order is not None:
        order = np.asarray(order)
        w = w[np.ix_(order, order)]
    lo, hi = float(w.min()), float(w.max())
    if hi > lo:
        img = (w - lo) / (hi - lo) * 255.0
    else:
        img = np.zeros_like(w)
    return np.round(img).astype(np.uint8)


def _kmeanspp(rows, k, rng):
    n = rows.shape[0]
    centers = np.empty((k, rows.shape[1]))
    centers[0] = rows[rng.integers(n)]
    d2 = _sqdist(rows, centers[:1]).ravel()
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[c] = rows[rng.integers(n)]
        else:
            centers[c] = rows[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, _sqdist(rows, centers[c : c + 1]).ravel())
    return centers


def _sqdist(a, b):
    d = np.maximum(
        (a * a).sum(axis=1)[:, None] - 2.0 * a @ b.T + (b * b).sum(axis=1)[None, :],
        0.0,
    )
    return d

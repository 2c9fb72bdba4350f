"""Multi-restart Lloyd k-means over the columns of a consensus embedding.

The embedding H is k x n; its columns are the points to cluster, passed to
k-means unscaled. Restarts use k-means++ seeding, each restart drawing from
its own generator derived from (seed, restart index), so serial and parallel
execution pick the same winner.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadParamError, TooFewPointsError


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    restarts: int = 50
    max_iters: int = 300
    tol: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise BadParamError(f"k must be >= 2, got {self.k}")
        if self.restarts < 1:
            raise BadParamError(f"restarts must be >= 1, got {self.restarts}")
        if self.max_iters < 1:
            raise BadParamError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol < 0:
            raise BadParamError(f"tol must be >= 0, got {self.tol}")


@dataclass(frozen=True)
class Labeling:
    """Winning restart: integer labels in [0, k), its within-cluster sum of
    squares, and the centers (each the mean of its assigned points)."""

    labels: np.ndarray
    inertia: float
    centers: np.ndarray


def _sq_dists(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """(n, k) squared Euclidean distances, never negative."""
    d = (
        np.sum(X * X, axis=1)[:, None]
        - 2.0 * X @ centers.T
        + np.sum(centers * centers, axis=1)[None, :]
    )
    return np.maximum(d, 0.0)


def _kmeanspp_centers(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # every point coincides with an existing center
            idx = int(rng.integers(n))
        centers[j] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))
    return centers


def _assign_with_repair(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Nearest-center labels (ties to the lowest index). Empty clusters are
    reseeded at the point farthest from its currently assigned center, one
    repair pass per empty cluster, then reassigned."""
    k = centers.shape[0]
    for _ in range(k):
        labels = np.argmin(_sq_dists(X, centers), axis=1)
        counts = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return labels
        own = np.sum((X - centers[labels]) ** 2, axis=1)
        for e in empty:
            far = int(np.argmax(own))
            centers[e] = X[far]
            own[far] = -1.0
    return np.argmin(_sq_dists(X, centers), axis=1)


def _cluster_means(X: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    counts = np.bincount(labels, minlength=k).astype(float)
    sums = np.zeros((k, X.shape[1]))
    np.add.at(sums, labels, X)
    return sums / np.maximum(counts, 1.0)[:, None]


def _wcss(X: np.ndarray, labels: np.ndarray, centers: np.ndarray) -> float:
    return float(np.sum((X - centers[labels]) ** 2))


def _lloyd(X: np.ndarray, k: int, rng: np.random.Generator, max_iters: int,
           tol: float) -> tuple[np.ndarray, np.ndarray, float, list[float]]:
    centers = _kmeanspp_centers(X, k, rng)
    labels = _assign_with_repair(X, centers)
    history = []
    for _ in range(max_iters):
        new_centers = _cluster_means(X, labels, k)
        shift = float(np.sqrt(np.max(np.sum((new_centers - centers) ** 2, axis=1))))
        centers = new_centers
        new_labels = _assign_with_repair(X, centers)
        history.append(_wcss(X, new_labels, _cluster_means(X, new_labels, k)))
        if np.array_equal(new_labels, labels) or shift <= tol:
            labels = new_labels
            break
        labels = new_labels
    centers = _cluster_means(X, labels, k)
    return labels, centers, _wcss(X, labels, centers), history


def kmeans(points: np.ndarray, cfg: KMeansConfig) -> Labeling:
    """Cluster the columns of ``points`` (dim x n) into cfg.k groups.

    Runs cfg.restarts independent Lloyd passes with k-means++ seeding and
    returns the labeling with minimum inertia; ties go to the lowest restart
    index. Deterministic for fixed (points, cfg).
    """
    X = np.asarray(points, dtype=np.float64).T
    n = X.shape[0]
    if n < cfg.k:
        raise TooFewPointsError(f"{n} points cannot form {cfg.k} clusters")
    best: Labeling | None = None
    for r in range(cfg.restarts):
        rng = np.random.default_rng([cfg.seed, r])
        labels, centers, inertia, _ = _lloyd(X, cfg.k, rng, cfg.max_iters, cfg.tol)
        if best is None or inertia < best.inertia:
            best = Labeling(labels=labels, inertia=inertia, centers=centers)
    return best

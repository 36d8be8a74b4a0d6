"""Kernel k-means with soft assignments, the cluster-gating preprocessing step.

All geometry is computed from Gram entries only: the squared feature-space
distance from point j to the centroid of cluster S is

    K[j,j] - 2/|S| * sum_{s in S} K[j,s] + 1/|S|^2 * sum_{s,s' in S} K[s,s']
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SoftAssignment:
    """n x ell row-stochastic matrix of cluster likelihoods."""

    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.float64)
        if c.ndim != 2:
            raise ValueError("soft assignment must be 2-D")
        if np.any(c < 0.0) or np.any(c > 1.0):
            raise ValueError("soft assignment entries must lie in [0, 1]")
        if np.any(np.abs(c.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("soft assignment rows must sum to 1")
        object.__setattr__(self, "c", c)

    @property
    def n_clusters(self) -> int:
        return self.c.shape[1]


def _cluster_sqdist(gram: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """n x k matrix of squared distances to each cluster centroid.

    Empty clusters get +inf columns; callers reseed them.
    """
    n = gram.shape[0]
    diag = np.diag(gram)
    out = np.empty((n, k))
    for r in range(k):
        members = np.flatnonzero(labels == r)
        if members.size == 0:
            out[:, r] = np.inf
            continue
        col = gram[:, members]
        within = gram[np.ix_(members, members)].sum()
        out[:, r] = diag - 2.0 * col.mean(axis=1) + within / members.size**2
    return out


def _kmeanspp_seeds(gram: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ D^2 seeding in kernel space; returns k point indices."""
    n = gram.shape[0]
    diag = np.diag(gram)
    seeds = [int(rng.integers(0, n))]
    d2 = diag - 2.0 * gram[:, seeds[0]] + diag[seeds[0]]
    np.maximum(d2, 0.0, out=d2)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all points coincide with chosen seeds; pick any unchosen index
            remaining = np.setdiff1d(np.arange(n), seeds)
            nxt = int(remaining[rng.integers(0, remaining.size)])
        else:
            probs = d2 / total
            nxt = int(rng.choice(n, p=probs))
        seeds.append(nxt)
        cand = diag - 2.0 * gram[:, nxt] + diag[nxt]
        np.maximum(cand, 0.0, out=cand)
        d2 = np.minimum(d2, cand)
    return np.asarray(seeds)


def kernel_kmeans_objective(gram: np.ndarray, labels: np.ndarray) -> float:
    """Within-cluster sum of squared feature-space distances."""
    k = int(labels.max()) + 1
    d2 = _cluster_sqdist(gram, labels, k)
    return float(d2[np.arange(len(labels)), labels].sum())


def kernel_kmeans(
    gram: np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = 100,
    init: np.ndarray | None = None,
) -> np.ndarray:
    """Lloyd iteration in feature space; returns a hard assignment vector.

    Initialization is k-means++ seeding from ``seed`` unless explicit
    ``init`` labels are given. Empty clusters are reseeded from the point
    farthest from its current centroid, which keeps the objective
    non-increasing.
    """
    gram = np.asarray(gram, dtype=np.float64)
    n = gram.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k must be in [1, {n}], got {k}")

    if init is not None:
        labels = np.asarray(init, dtype=np.int64).copy()
        if labels.shape != (n,) or labels.min() < 0 or labels.max() >= k:
            raise ValueError("init labels must be a length-n vector in [0, k)")
    else:
        rng = np.random.Generator(np.random.PCG64(seed))
        seeds = _kmeanspp_seeds(gram, k, rng)
        diag = np.diag(gram)
        d2 = diag[:, None] - 2.0 * gram[:, seeds] + diag[seeds][None, :]
        labels = np.argmin(d2, axis=1).astype(np.int64)
        labels[seeds] = np.arange(k)

    for _ in range(max_iter):
        d2 = _cluster_sqdist(gram, labels, k)
        new_labels = np.argmin(d2, axis=1).astype(np.int64)
        # reseed empties from the farthest point so every cluster survives
        for r in range(k):
            if not np.any(new_labels == r):
                own = d2[np.arange(n), new_labels]
                # exclude points that are sole members of their cluster
                counts = np.bincount(new_labels, minlength=k)
                movable = counts[new_labels] > 1
                if not movable.any():
                    break
                far = int(np.argmax(np.where(movable, own, -np.inf)))
                new_labels[far] = r
                d2 = _cluster_sqdist(gram, new_labels, k)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels


def soften(gram: np.ndarray, labels: np.ndarray, tau: float = 1.0) -> SoftAssignment:
    """Soft assignment c[j,r] = softmax_r(-dist^2(j, centroid_r) / tau)."""
    if tau <= 0.0:
        raise ValueError("temperature must be positive")
    k = int(np.max(labels)) + 1
    d2 = _cluster_sqdist(np.asarray(gram, dtype=np.float64), labels, k)
    return SoftAssignment(_softmax_rows(-d2 / tau))


def soften_cross(
    diag_z: np.ndarray,
    cross: np.ndarray,
    gram: np.ndarray,
    labels: np.ndarray,
    tau: float = 1.0,
) -> SoftAssignment:
    """Soft assignments for out-of-sample points against training centroids.

    ``cross`` is the n_train x p kernel matrix between training points and
    the new points; ``diag_z`` holds k(z, z) for each new point.
    """
    if tau <= 0.0:
        raise ValueError("temperature must be positive")
    gram = np.asarray(gram, dtype=np.float64)
    cross = np.asarray(cross, dtype=np.float64)
    diag_z = np.asarray(diag_z, dtype=np.float64)
    k = int(np.max(labels)) + 1
    p = cross.shape[1]
    d2 = np.empty((p, k))
    for r in range(k):
        members = np.flatnonzero(labels == r)
        if members.size == 0:
            d2[:, r] = np.inf
            continue
        within = gram[np.ix_(members, members)].sum()
        d2[:, r] = diag_z - 2.0 * cross[members].mean(axis=0) + within / members.size**2
    return SoftAssignment(_softmax_rows(-d2 / tau))


def _softmax_rows(v: np.ndarray) -> np.ndarray:
    shifted = v - v.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)

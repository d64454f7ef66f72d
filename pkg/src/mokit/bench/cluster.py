"""Embedding deduplication and K-means prompt clustering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregate import BenchError

DUP_THRESHOLD = 0.98
MAX_ITER = 200
SHIFT_TOL = 1e-6


@dataclass(frozen=True)
class ClusterResult:
    assignments: np.ndarray  # cluster id per original item
    representatives: list[int]  # original item index nearest each centroid
    kept_indices: list[int]  # deduped item indices, input order
    duplicate_of: dict[int, int]  # removed item -> kept item it matched


def dedup_embeddings(
    embeddings: np.ndarray, dup_threshold: float = DUP_THRESHOLD
) -> tuple[list[int], dict[int, int]]:
    """Drop items whose cosine similarity to an earlier kept item exceeds the
    threshold; first occurrence wins."""
    vecs = np.asarray(embeddings, dtype=float)
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise BenchError("zero-norm embedding")
    unit = vecs / norms
    kept: list[int] = []
    duplicate_of: dict[int, int] = {}
    for i in range(len(unit)):
        match = None
        for k in kept:
            if float(np.dot(unit[i], unit[k])) > dup_threshold:
                match = k
                break
        if match is None:
            kept.append(i)
        else:
            duplicate_of[i] = match
    return kept, duplicate_of


def _farthest_point_seeds(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy farthest-point centroid seeding; first seed is rng-chosen."""
    chosen = [int(rng.integers(len(points)))]
    dist = np.linalg.norm(points - points[chosen[0]], axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(dist))  # argmax ties resolve to the lowest index
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(points - points[nxt], axis=1))
    return points[chosen].copy()


def kmeans(
    points: np.ndarray, k: int, seed: int, max_iter: int = MAX_ITER, tol: float = SHIFT_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm with farthest-point seeding.

    Returns (assignments, centroids). Runs until the max centroid shift drops
    below tol or max_iter passes; empty clusters are reseeded to the point
    farthest from its current centroid.
    """
    points = np.asarray(points, dtype=float)
    if not 1 <= k <= len(points):
        raise BenchError(f"k must be in [1, {len(points)}], got {k}")
    rng = np.random.default_rng(seed)
    centroids = _farthest_point_seeds(points, k, rng)
    assignments = np.zeros(len(points), dtype=int)
    for _ in range(max_iter):
        dists = np.linalg.norm(points[:, None, :] - centroids[None, :, :], axis=2)
        assignments = np.argmin(dists, axis=1)
        new_centroids = centroids.copy()
        for c in range(k):
            members = points[assignments == c]
            if len(members):
                new_centroids[c] = members.mean(axis=0)
            else:
                new_centroids[c] = points[int(np.argmax(dists.min(axis=1)))]
        shift = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        if shift < tol:
            break
    dists = np.linalg.norm(points[:, None, :] - centroids[None, :, :], axis=2)
    return np.argmin(dists, axis=1), centroids


def dedup_and_cluster(
    embeddings: np.ndarray,
    k: int,
    seed: int,
    dup_threshold: float = DUP_THRESHOLD,
) -> ClusterResult:
    """Deduplicate, cluster the survivors, and map duplicates to their kept
    item's cluster. Every input item receives exactly one cluster."""
    vecs = np.asarray(embeddings, dtype=float)
    kept, duplicate_of = dedup_embeddings(vecs, dup_threshold)
    if k > len(kept):
        raise BenchError(f"k={k} exceeds {len(kept)} distinct items after dedup")
    kept_points = vecs[kept]
    kept_assign, centroids = kmeans(kept_points, k, seed)

    assignments = np.empty(len(vecs), dtype=int)
    for pos, idx in enumerate(kept):
        assignments[idx] = kept_assign[pos]
    for dup, src in duplicate_of.items():
        assignments[dup] = assignments[src]

    representatives = []
    for c in range(k):
        members = [pos for pos in range(len(kept)) if kept_assign[pos] == c]
        dists = [float(np.linalg.norm(kept_points[pos] - centroids[c])) for pos in members]
        representatives.append(kept[members[int(np.argmin(dists))]])
    return ClusterResult(
        assignments=assignments,
        representatives=representatives,
        kept_indices=kept,
        duplicate_of=duplicate_of,
    )

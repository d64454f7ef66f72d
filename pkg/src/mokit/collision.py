"""Capsule self-collision: exact narrow phase plus an AABB-tree broad phase.

Each bone (parent -> joint) carries a capsule of the skeleton's per-bone
radius. Penetration counting excludes bone pairs that share a joint. The tree
only prunes pairs whose boxes cannot overlap, so accelerated results are
identical to the all-pairs brute force.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .kinematics import joint_world_positions
from .motion import MotionError, MotionSequence, Skeleton


@dataclass(frozen=True)
class Capsule:
    """Swept sphere between two endpoints (meters)."""

    endpoint_a: np.ndarray
    endpoint_b: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "endpoint_a", np.asarray(self.endpoint_a, dtype=float))
        object.__setattr__(self, "endpoint_b", np.asarray(self.endpoint_b, dtype=float))
        if not self.radius > 0:
            raise ValueError("capsule radius must be > 0")


def capsule_distance(a: Capsule, b: Capsule) -> float:
    """Surface distance between two capsules; negative is penetration depth."""
    dist = _kernels.segseg_distances(a.endpoint_a, a.endpoint_b, b.endpoint_a, b.endpoint_b)
    return float(dist) - (a.radius + b.radius)


class AabbTree:
    """Static median-split tree over axis-aligned boxes.

    Nodes are stored in flat arrays; leaves reference the input box indices.
    """

    def __init__(self, mins: np.ndarray, maxs: np.ndarray, leaf_size: int = 2):
        self.mins = np.asarray(mins, dtype=float)
        self.maxs = np.asarray(maxs, dtype=float)
        self.leaf_size = leaf_size
        n = self.mins.shape[0]
        self.node_mins: list[np.ndarray] = []
        self.node_maxs: list[np.ndarray] = []
        self.node_left: list[int] = []
        self.node_right: list[int] = []
        self.node_items: list[np.ndarray | None] = []
        self.root = self._build(np.arange(n)) if n else -1

    def _build(self, items: np.ndarray) -> int:
        node = len(self.node_mins)
        self.node_mins.append(self.mins[items].min(axis=0))
        self.node_maxs.append(self.maxs[items].max(axis=0))
        self.node_left.append(-1)
        self.node_right.append(-1)
        self.node_items.append(None)
        if len(items) <= self.leaf_size:
            self.node_items[node] = items
            return node
        centers = 0.5 * (self.mins[items] + self.maxs[items])
        axis = int(np.argmax(centers.max(axis=0) - centers.min(axis=0)))
        order = items[np.argsort(centers[:, axis], kind="stable")]
        half = len(order) // 2
        self.node_left[node] = self._build(order[:half])
        self.node_right[node] = self._build(order[half:])
        return node

    def _overlap(self, n1: int, n2: int) -> bool:
        return bool(
            np.all(self.node_mins[n1] <= self.node_maxs[n2])
            and np.all(self.node_mins[n2] <= self.node_maxs[n1])
        )

    def overlapping_pairs(self) -> np.ndarray:
        """All box index pairs (i < j) whose boxes overlap, sorted."""
        if self.root < 0:
            return np.empty((0, 2), dtype=int)
        pairs: set[tuple[int, int]] = set()
        stack = [(self.root, self.root)]
        while stack:
            n1, n2 = stack.pop()
            if not self._overlap(n1, n2):
                continue
            items1, items2 = self.node_items[n1], self.node_items[n2]
            if items1 is not None and items2 is not None:
                for i in items1:
                    for j in items2:
                        if i == j:
                            continue
                        if np.all(self.mins[i] <= self.maxs[j]) and np.all(self.mins[j] <= self.maxs[i]):
                            pairs.add((int(min(i, j)), int(max(i, j))))
                continue
            if n1 == n2:
                left, right = self.node_left[n1], self.node_right[n1]
                stack.extend([(left, left), (right, right), (left, right)])
            elif items1 is not None:
                stack.extend([(n1, self.node_left[n2]), (n1, self.node_right[n2])])
            else:
                stack.extend([(self.node_left[n1], n2), (self.node_right[n1], n2)])
        if not pairs:
            return np.empty((0, 2), dtype=int)
        return np.array(sorted(pairs), dtype=int)


def bone_segments(skeleton: Skeleton, positions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-bone segment endpoints from (…, J, 3) joint positions."""
    joints = skeleton.non_root_joints
    parents = skeleton.parents[joints]
    return positions[..., parents, :], positions[..., joints, :]


def nonadjacent_bone_pairs(skeleton: Skeleton) -> np.ndarray:
    """Unordered bone index pairs that do not share a joint, shape (P, 2)."""
    bones = skeleton.bones()
    pairs = [
        (i, j)
        for i in range(len(bones))
        for j in range(i + 1, len(bones))
        if not set(bones[i]) & set(bones[j])
    ]
    return np.array(pairs, dtype=int).reshape(-1, 2)


def penetrating_pair_counts(motion: MotionSequence, use_bvh: bool = True) -> np.ndarray:
    """Number of penetrating non-adjacent bone pairs in each frame."""
    skeleton = motion.skeleton
    if skeleton.capsule_radii is None:
        raise MotionError("skeleton has no capsule radii")
    positions = joint_world_positions(motion)
    starts, ends = bone_segments(skeleton, positions)
    radii = skeleton.capsule_radii
    pairs = nonadjacent_bone_pairs(skeleton)
    counts = np.zeros(motion.num_frames, dtype=int)
    if len(pairs) == 0:
        return counts

    if not use_bvh:
        dist = _kernels.capsule_pair_distances(starts, ends, radii, pairs[:, 0], pairs[:, 1])
        return np.count_nonzero(dist < 0.0, axis=-1)

    adjacent_free = {tuple(p) for p in pairs.tolist()}
    for t in range(motion.num_frames):
        lo = np.minimum(starts[t], ends[t]) - radii[:, None]
        hi = np.maximum(starts[t], ends[t]) + radii[:, None]
        candidates = AabbTree(lo, hi).overlapping_pairs()
        candidates = [p for p in map(tuple, candidates.tolist()) if p in adjacent_free]
        if not candidates:
            continue
        cand = np.array(candidates, dtype=int)
        dist = _kernels.capsule_pair_distances(starts[t], ends[t], radii, cand[:, 0], cand[:, 1])
        counts[t] = int(np.count_nonzero(dist < 0.0))
    return counts


def body_penetration(motion: MotionSequence, use_bvh: bool = True) -> tuple[float, float]:
    """(mean penetrating pairs per frame, fraction of frames with any pair)."""
    counts = penetrating_pair_counts(motion, use_bvh=use_bvh)
    return float(counts.mean()), float(np.count_nonzero(counts > 0) / len(counts))

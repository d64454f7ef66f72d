"""Core motion types: skeleton, frames, and motion sequences.

Coordinate convention (fixed for the whole package):
  right-handed axes, +z up, ground plane z = 0, canonical facing +y.
Every world-space quantity (joint positions, root translation) is expressed
in this frame, in meters.

Vectors are float64 numpy arrays: a point is shape (3,), a unit quaternion is
shape (4,) in (w, x, y, z) order. Sequences stack frames along axis 0, so a
motion stores root translation as (T, 3), local joint rotations as
(T, J-1, 4) in increasing joint-index order (root excluded), and optional
world joint positions as (T, J, 3).

All types are immutable after construction (frozen dataclasses over
read-only arrays) and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Sequence

import numpy as np

from . import quat

UP_AXIS = np.array([0.0, 0.0, 1.0])
FORWARD_AXIS = np.array([0.0, 1.0, 0.0])
GROUND_Z = 0.0

QUAT_UNIT_TOL = 1e-6


class MotionError(ValueError):
    """Raised for structurally invalid skeletons, frames, or sequences."""


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _check_finite(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise MotionError(f"{name} contains NaN or Inf")


def _check_unit(name: str, q: np.ndarray, tol: float = QUAT_UNIT_TOL) -> None:
    norms = np.linalg.norm(q, axis=-1)
    worst = float(np.max(np.abs(norms - 1.0))) if q.size else 0.0
    if worst > tol:
        raise MotionError(f"{name} contains non-unit quaternions (max deviation {worst:.2e})")


@dataclass(frozen=True)
class Skeleton:
    """Joint hierarchy with rest offsets, foot joints, and bone capsule radii.

    parents encodes a single-rooted tree: exactly one entry is -1 and every
    other entry points at an earlier-validated joint without cycles.
    rest_offsets[j] is the offset from parent(j) to j in the rest pose
    (meters); the root entry is ignored by forward kinematics.
    capsule_radii holds one radius per non-root joint (the bone from its
    parent), ordered by increasing joint index, and may be None when the
    skeleton carries no collision proxy.
    """

    joint_names: tuple[str, ...]
    parents: np.ndarray
    rest_offsets: np.ndarray
    foot_joints: tuple[int, ...] = ()
    capsule_radii: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "joint_names", tuple(str(n) for n in self.joint_names))
        object.__setattr__(self, "parents", _frozen_array(self.parents, dtype=int))
        object.__setattr__(self, "rest_offsets", _frozen_array(self.rest_offsets))
        object.__setattr__(self, "foot_joints", tuple(sorted(int(j) for j in self.foot_joints)))
        if self.capsule_radii is not None:
            object.__setattr__(self, "capsule_radii", _frozen_array(self.capsule_radii))
        self._validate()

    def _validate(self) -> None:
        j = len(self.joint_names)
        if j == 0:
            raise MotionError("skeleton has no joints")
        if self.parents.shape != (j,):
            raise MotionError(f"parents must have shape ({j},)")
        roots = np.flatnonzero(self.parents < 0)
        if len(roots) != 1:
            raise MotionError(f"skeleton must have exactly one root, found {len(roots)}")
        if np.any(self.parents >= j):
            raise MotionError("parent index out of range")
        # Cycle check: walking up from every joint must terminate at the root.
        for start in range(j):
            seen = set()
            node = start
            while node >= 0:
                if node in seen:
                    raise MotionError("parents array contains a cycle")
                seen.add(node)
                node = int(self.parents[node])
        if self.rest_offsets.shape != (j, 3):
            raise MotionError(f"rest_offsets must have shape ({j}, 3)")
        _check_finite("rest_offsets", self.rest_offsets)
        for f in self.foot_joints:
            if not 0 <= f < j:
                raise MotionError(f"foot joint index {f} out of range")
        if self.capsule_radii is not None:
            if self.capsule_radii.shape != (j - 1,):
                raise MotionError(f"capsule_radii must have one entry per non-root joint ({j - 1},)")
            if np.any(self.capsule_radii <= 0):
                raise MotionError("capsule_radii must be positive")

    @property
    def num_joints(self) -> int:
        return len(self.joint_names)

    @property
    def root(self) -> int:
        return int(np.flatnonzero(self.parents < 0)[0])

    @property
    def non_root_joints(self) -> np.ndarray:
        """Non-root joint indices in increasing order (the joint_q/radii order)."""
        return np.flatnonzero(self.parents >= 0)

    def bones(self) -> list[tuple[int, int]]:
        """(parent, joint) pairs for every non-root joint, in radii order."""
        return [(int(self.parents[j]), int(j)) for j in self.non_root_joints]

    def topological_order(self) -> list[int]:
        """Joint indices ordered so parents always precede children."""
        order: list[int] = []
        remaining = set(range(self.num_joints))
        placed = set()
        while remaining:
            progressed = False
            for j in sorted(remaining):
                p = int(self.parents[j])
                if p < 0 or p in placed:
                    order.append(j)
                    placed.add(j)
                    remaining.discard(j)
                    progressed = True
            if not progressed:  # unreachable after _validate, kept as a guard
                raise MotionError("parents array is not a tree")
        return order


@dataclass(frozen=True)
class Frame:
    """One pose: root transform plus local joint rotations, and/or world positions.

    At least one complete representation must be present: either the rotation
    form (root_translation, root_orientation, joint_rotations) or explicit
    joint_positions.
    """

    root_translation: np.ndarray | None = None
    root_orientation: np.ndarray | None = None
    joint_rotations: np.ndarray | None = None
    joint_positions: np.ndarray | None = None

    def __post_init__(self):
        for name in ("root_translation", "root_orientation", "joint_rotations", "joint_positions"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _frozen_array(value))
        if not (self.has_rotations or self.has_positions):
            raise MotionError("frame needs root pose + joint rotations, or joint positions")

    @property
    def has_rotations(self) -> bool:
        return (
            self.root_translation is not None
            and self.root_orientation is not None
            and self.joint_rotations is not None
        )

    @property
    def has_positions(self) -> bool:
        return self.joint_positions is not None


@dataclass(frozen=True)
class MotionSequence:
    """A fixed-rate sequence of identically structured frames over one skeleton."""

    fps: float
    skeleton: Skeleton
    id: str = ""
    root_t: np.ndarray | None = None
    root_q: np.ndarray | None = None
    joint_q: np.ndarray | None = None
    joint_pos: np.ndarray | None = None

    def __post_init__(self):
        if not self.fps > 0:
            raise MotionError("fps must be > 0")
        for name in ("root_t", "root_q", "joint_q", "joint_pos"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _frozen_array(value))
        self._validate()

    def _validate(self) -> None:
        j = self.skeleton.num_joints
        lengths = set()
        if self.root_t is not None:
            if self.root_t.ndim != 2 or self.root_t.shape[1] != 3:
                raise MotionError("root_t must have shape (T, 3)")
            _check_finite("root_t", self.root_t)
            lengths.add(self.root_t.shape[0])
        if self.root_q is not None:
            if self.root_q.ndim != 2 or self.root_q.shape[1] != 4:
                raise MotionError("root_q must have shape (T, 4)")
            _check_finite("root_q", self.root_q)
            _check_unit("root_q", self.root_q)
            lengths.add(self.root_q.shape[0])
        if self.joint_q is not None:
            if self.joint_q.ndim != 3 or self.joint_q.shape[1:] != (j - 1, 4):
                raise MotionError(f"joint_q must have shape (T, {j - 1}, 4)")
            _check_finite("joint_q", self.joint_q)
            _check_unit("joint_q", self.joint_q)
            lengths.add(self.joint_q.shape[0])
        if self.joint_pos is not None:
            if self.joint_pos.ndim != 3 or self.joint_pos.shape[1:] != (j, 3):
                raise MotionError(f"joint_pos must have shape (T, {j}, 3)")
            _check_finite("joint_pos", self.joint_pos)
            lengths.add(self.joint_pos.shape[0])
        if len(lengths) > 1:
            raise MotionError(f"inconsistent frame counts across channels: {sorted(lengths)}")
        if not lengths or 0 in lengths:
            raise MotionError("motion has no frames")
        if not (self.has_rotations or self.has_positions):
            raise MotionError("motion needs root pose + joint rotations, or joint positions")

    @property
    def num_frames(self) -> int:
        for arr in (self.root_t, self.root_q, self.joint_q, self.joint_pos):
            if arr is not None:
                return arr.shape[0]
        raise MotionError("motion has no frames")  # unreachable

    @property
    def duration(self) -> float:
        """Clip span in seconds, (T - 1) / fps."""
        return (self.num_frames - 1) / self.fps

    @property
    def has_rotations(self) -> bool:
        return self.root_t is not None and self.root_q is not None and self.joint_q is not None

    @property
    def has_positions(self) -> bool:
        return self.joint_pos is not None

    def frame(self, i: int) -> Frame:
        return Frame(
            root_translation=None if self.root_t is None else self.root_t[i],
            root_orientation=None if self.root_q is None else self.root_q[i],
            joint_rotations=None if self.joint_q is None else self.joint_q[i],
            joint_positions=None if self.joint_pos is None else self.joint_pos[i],
        )

    @property
    def frames(self) -> list[Frame]:
        return [self.frame(i) for i in range(self.num_frames)]

    def __iter__(self) -> Iterator[Frame]:
        return iter(self.frames)

    def with_(self, **changes) -> "MotionSequence":
        return replace(self, **changes)

    def slice(self, start: int, stop: int, id: str | None = None) -> "MotionSequence":
        """Sub-sequence of frames [start, stop). fps and skeleton unchanged."""
        if not 0 <= start < stop <= self.num_frames:
            raise MotionError(f"invalid frame range [{start}, {stop})")
        pick = lambda a: None if a is None else a[start:stop]
        return MotionSequence(
            fps=self.fps,
            skeleton=self.skeleton,
            id=self.id if id is None else id,
            root_t=pick(self.root_t),
            root_q=pick(self.root_q),
            joint_q=pick(self.joint_q),
            joint_pos=pick(self.joint_pos),
        )

    @classmethod
    def from_frames(
        cls,
        fps: float,
        skeleton: Skeleton,
        frames: Sequence[Frame],
        id: str = "",
    ) -> "MotionSequence":
        if not frames:
            raise MotionError("motion has no frames")
        first = frames[0]
        for k, f in enumerate(frames):
            if f.has_rotations != first.has_rotations or f.has_positions != first.has_positions:
                raise MotionError(f"frame {k} is structurally different from frame 0")
        stack = lambda attr: (
            None
            if getattr(first, attr) is None
            else np.stack([getattr(f, attr) for f in frames])
        )
        return cls(
            fps=fps,
            skeleton=skeleton,
            id=id,
            root_t=stack("root_translation"),
            root_q=stack("root_orientation"),
            joint_q=stack("joint_rotations"),
            joint_pos=stack("joint_positions"),
        )


# 22-joint humanoid proxy used by fixtures, demos, and the CLI selftest paths.
# Offsets are meters in the package convention (z-up, facing +y, left = -x).
_HUMANOID = [
    # name,            parent, offset (x, y, z),        bone radius (parent -> joint)
    ("pelvis", -1, (0.0, 0.0, 0.95), None),
    ("l_hip", 0, (-0.10, 0.0, -0.06), 0.05),
    ("r_hip", 0, (0.10, 0.0, -0.06), 0.05),
    ("spine1", 0, (0.0, 0.0, 0.12), 0.055),
    ("l_knee", 1, (0.0, 0.0, -0.40), 0.055),
    ("r_knee", 2, (0.0, 0.0, -0.40), 0.055),
    ("spine2", 3, (0.0, 0.0, 0.14), 0.055),
    ("l_ankle", 4, (0.0, 0.0, -0.42), 0.05),
    ("r_ankle", 5, (0.0, 0.0, -0.42), 0.05),
    ("spine3", 6, (0.0, 0.0, 0.14), 0.055),
    ("l_foot", 7, (0.0, 0.13, -0.05), 0.03),
    ("r_foot", 8, (0.0, 0.13, -0.05), 0.03),
    ("neck", 9, (0.0, 0.0, 0.14), 0.04),
    ("l_collar", 9, (-0.10, 0.0, 0.05), 0.04),
    ("r_collar", 9, (0.10, 0.0, 0.05), 0.04),
    ("head", 12, (0.0, 0.0, 0.18), 0.06),
    ("l_shoulder", 13, (-0.12, 0.0, 0.0), 0.045),
    ("r_shoulder", 14, (0.12, 0.0, 0.0), 0.045),
    ("l_elbow", 16, (-0.26, 0.0, 0.0), 0.04),
    ("r_elbow", 17, (0.26, 0.0, 0.0), 0.04),
    ("l_wrist", 18, (-0.25, 0.0, 0.0), 0.035),
    ("r_wrist", 19, (0.25, 0.0, 0.0), 0.035),
]


def default_skeleton() -> Skeleton:
    """A 22-joint humanoid whose T-pose is free of capsule self-penetration."""
    return Skeleton(
        joint_names=[row[0] for row in _HUMANOID],
        parents=[row[1] for row in _HUMANOID],
        rest_offsets=[row[2] for row in _HUMANOID],
        foot_joints=(7, 8, 10, 11),
        capsule_radii=[row[3] for row in _HUMANOID if row[3] is not None],
    )


def rest_motion(skeleton: Skeleton, num_frames: int, fps: float = 20.0, id: str = "rest") -> MotionSequence:
    """Static rest-pose sequence: identity rotations, root at its rest offset."""
    t = num_frames
    j = skeleton.num_joints
    root = skeleton.root
    return MotionSequence(
        fps=fps,
        skeleton=skeleton,
        id=id,
        root_t=np.tile(skeleton.rest_offsets[root], (t, 1)),
        root_q=quat.identity((t,)),
        joint_q=quat.identity((t, j - 1)),
    )

"""Forward kinematics over the skeleton tree.

Bone lengths are invariant by construction: each joint sits at its parent's
position plus the rest offset rotated by the parent's global rotation.
"""

from __future__ import annotations

import numpy as np

from . import quat
from .motion import Frame, MotionError, MotionSequence, Skeleton


def global_rotations(skeleton: Skeleton, root_q: np.ndarray, joint_q: np.ndarray) -> np.ndarray:
    """World rotation per joint, shape (T, J, 4).

    root_q is (T, 4); joint_q is (T, J-1, 4) ordered by increasing non-root
    joint index (local, relative to the parent frame).
    """
    t = root_q.shape[0]
    j = skeleton.num_joints
    local = np.empty((t, j, 4))
    local[:, skeleton.root] = root_q
    local[:, skeleton.non_root_joints] = joint_q
    world = np.empty_like(local)
    for node in skeleton.topological_order():
        parent = int(skeleton.parents[node])
        if parent < 0:
            world[:, node] = local[:, node]
        else:
            world[:, node] = quat.multiply(world[:, parent], local[:, node])
    return world


def fk_positions(motion: MotionSequence) -> np.ndarray:
    """World joint positions (T, J, 3) from root pose and local rotations."""
    if not motion.has_rotations:
        raise MotionError("insufficient pose data: forward kinematics needs root pose and joint rotations")
    skeleton = motion.skeleton
    world_q = global_rotations(skeleton, motion.root_q, motion.joint_q)
    t = motion.num_frames
    pos = np.empty((t, skeleton.num_joints, 3))
    for node in skeleton.topological_order():
        parent = int(skeleton.parents[node])
        if parent < 0:
            pos[:, node] = motion.root_t
        else:
            pos[:, node] = pos[:, parent] + quat.rotate(world_q[:, parent], skeleton.rest_offsets[node])
    return pos


def forward_kinematics(skeleton: Skeleton, frame: Frame) -> np.ndarray:
    """World joint positions (J, 3) for a single frame."""
    if not frame.has_rotations:
        raise MotionError("insufficient pose data: frame has no root pose or joint rotations")
    single = MotionSequence(
        fps=1.0,
        skeleton=skeleton,
        root_t=frame.root_translation[None],
        root_q=frame.root_orientation[None],
        joint_q=frame.joint_rotations[None],
    )
    return fk_positions(single)[0]


def joint_world_positions(motion: MotionSequence) -> np.ndarray:
    """Stored world positions when present, forward kinematics otherwise."""
    if motion.has_positions:
        return motion.joint_pos
    return fk_positions(motion)

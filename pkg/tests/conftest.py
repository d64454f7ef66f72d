import numpy as np
import pytest

from mokit import quat
from mokit.motion import MotionSequence, Skeleton, default_skeleton


@pytest.fixture
def skeleton():
    return default_skeleton()


def chain_skeleton(offsets, radii=None, foot_joints=()):
    """Serial chain: joint k is the child of joint k-1."""
    n = len(offsets)
    return Skeleton(
        joint_names=[f"j{k}" for k in range(n)],
        parents=[-1] + list(range(n - 1)),
        rest_offsets=offsets,
        foot_joints=foot_joints,
        capsule_radii=radii,
    )


def positions_motion(positions, fps=20.0, skeleton=None, id="pos"):
    """Positions-only sequence over the given (or default) skeleton."""
    positions = np.asarray(positions, dtype=float)
    if skeleton is None:
        skeleton = default_skeleton()
    return MotionSequence(fps=fps, skeleton=skeleton, id=id, joint_pos=positions)


def walk_motion(num_frames=230, fps=20.0, speed=1.0, id="walk", skeleton=None):
    """Smooth walk-like fixture: root advances along +y with gentle limb
    swings and permanently bent elbows/knees (never close to rest pose)."""
    skel = skeleton if skeleton is not None else default_skeleton()
    t = np.arange(num_frames) / fps
    root_t = np.stack([np.zeros_like(t), speed * t, np.full_like(t, 0.95)], axis=-1)
    root_q = quat.identity((num_frames,))
    joint_q = quat.identity((num_frames, skel.num_joints - 1))

    def set_joint(name, axis, angles):
        j = skel.joint_names.index(name)
        k = list(skel.non_root_joints).index(j)
        for i, ang in enumerate(angles):
            joint_q[i, k] = quat.from_axis_angle(axis, ang)

    swing = 0.3 * np.sin(2 * np.pi * 1.5 * t)
    set_joint("l_hip", (1, 0, 0), swing)
    set_joint("r_hip", (1, 0, 0), -swing)
    set_joint("l_shoulder", (1, 0, 0), -0.5 * swing)
    set_joint("r_shoulder", (1, 0, 0), 0.5 * swing)
    set_joint("l_elbow", (0, 0, 1), np.full(num_frames, -0.8))
    set_joint("r_elbow", (0, 0, 1), np.full(num_frames, 0.8))
    set_joint("l_knee", (1, 0, 0), np.full(num_frames, 0.4))
    set_joint("r_knee", (1, 0, 0), np.full(num_frames, 0.4))
    return MotionSequence(fps=fps, skeleton=skel, id=id, root_t=root_t, root_q=root_q, joint_q=joint_q)


def random_rotation_motion(num_frames, seed, fps=20.0, skeleton=None, id="rand"):
    """Random smooth-ish rotations and a random root path."""
    skel = skeleton if skeleton is not None else default_skeleton()
    rng = np.random.default_rng(seed)
    root_t = np.cumsum(rng.normal(0, 0.02, size=(num_frames, 3)), axis=0)
    root_t[:, 2] += 0.95
    root_q = quat.normalize(quat.identity((num_frames,)) + rng.normal(0, 0.1, size=(num_frames, 4)))
    joint_q = quat.normalize(
        quat.identity((num_frames, skel.num_joints - 1))
        + rng.normal(0, 0.15, size=(num_frames, skel.num_joints - 1, 4))
    )
    return MotionSequence(fps=fps, skeleton=skel, id=id, root_t=root_t, root_q=root_q, joint_q=joint_q)

import numpy as np
import pytest

from mokit import quat
from mokit.kinematics import fk_positions, forward_kinematics, joint_world_positions
from mokit.motion import Frame, MotionError, MotionSequence, Skeleton, default_skeleton, rest_motion
from mokit.processing import (
    canonicalize,
    facing_direction,
    finite_difference,
    gaussian_kernel,
    gaussian_smooth,
    perturb,
    resample,
)

from conftest import chain_skeleton, random_rotation_motion, walk_motion


# types ------------------------------------------------------------------

def test_skeleton_requires_single_root():
    with pytest.raises(MotionError):
        Skeleton(["a", "b"], [-1, -1], [(0, 0, 0), (0, 0, 1)])


def test_skeleton_rejects_cycle():
    with pytest.raises(MotionError):
        Skeleton(["a", "b", "c"], [-1, 2, 1], [(0, 0, 0)] * 3)


def test_skeleton_rejects_nonpositive_radius():
    with pytest.raises(MotionError):
        chain_skeleton([(0, 0, 0), (0, 0, 1)], radii=[0.0])


def test_frame_needs_one_representation():
    with pytest.raises(MotionError):
        Frame()
    Frame(joint_positions=np.zeros((2, 3)))  # positions-only is fine


def test_motion_rejects_nonunit_quaternions():
    skel = chain_skeleton([(0, 0, 0), (0, 0, 1)])
    with pytest.raises(MotionError):
        MotionSequence(
            fps=20,
            skeleton=skel,
            root_t=np.zeros((2, 3)),
            root_q=np.array([[2.0, 0, 0, 0]] * 2),
            joint_q=quat.identity((2, 1)),
        )


def test_motion_rejects_nan():
    skel = chain_skeleton([(0, 0, 0), (0, 0, 1)])
    pos = np.zeros((2, 2, 3))
    pos[1, 0, 0] = np.nan
    with pytest.raises(MotionError):
        MotionSequence(fps=20, skeleton=skel, joint_pos=pos)


def test_motion_arrays_are_immutable():
    m = rest_motion(default_skeleton(), 3)
    with pytest.raises(ValueError):
        m.root_t[0, 0] = 1.0


def test_from_frames_round_trip():
    skel = chain_skeleton([(0, 0, 0), (0, 0, 1)])
    frames = [
        Frame(
            root_translation=[0, 0, float(i)],
            root_orientation=[1, 0, 0, 0],
            joint_rotations=quat.identity((1,)),
        )
        for i in range(3)
    ]
    m = MotionSequence.from_frames(20.0, skel, frames, id="ft")
    assert m.num_frames == 3
    assert np.allclose(m.frame(2).root_translation, [0, 0, 2])


# forward kinematics ------------------------------------------------------

def test_fk_identity_two_joint_chain():
    skel = chain_skeleton([(0, 0, 0), (0, 0, 1)])
    frame = Frame(
        root_translation=[0, 0, 0],
        root_orientation=quat.identity(),
        joint_rotations=quat.identity((1,)),
    )
    pos = forward_kinematics(skel, frame)
    assert np.allclose(pos, [[0, 0, 0], [0, 0, 1]])


def test_fk_root_rotation_about_offset_axis():
    skel = chain_skeleton([(0, 0, 0), (0, 0, 1)])
    frame = Frame(
        root_translation=[0, 0, 0],
        root_orientation=quat.from_axis_angle((0, 0, 1), np.pi / 2),
        joint_rotations=quat.identity((1,)),
    )
    assert np.allclose(forward_kinematics(skel, frame)[1], [0, 0, 1], atol=1e-12)


def test_fk_three_joint_bend_matches_hand_matrices():
    # Chain along +z with a 90 degree bend about +x at the middle joint.
    skel = chain_skeleton([(0, 0, 0), (0, 0, 1.0), (0, 0, 0.5)])
    bend = quat.from_axis_angle((1, 0, 0), np.pi / 2)
    frame = Frame(
        root_translation=[0.2, 0.1, 0.0],
        root_orientation=quat.identity(),
        joint_rotations=np.stack([bend, quat.identity()]),
    )
    pos = forward_kinematics(skel, frame)

    # Independent oracle: explicit rotation-matrix composition.
    def rot_x(a):
        return np.array(
            [[1, 0, 0], [0, np.cos(a), -np.sin(a)], [0, np.sin(a), np.cos(a)]]
        )

    root = np.array([0.2, 0.1, 0.0])
    p1 = root + np.eye(3) @ np.array([0, 0, 1.0])
    p2 = p1 + (np.eye(3) @ rot_x(np.pi / 2)) @ np.array([0, 0, 0.5])
    assert np.allclose(pos[1], p1, atol=1e-12)
    assert np.allclose(pos[2], p2, atol=1e-12)


def test_fk_requires_rotations():
    skel = chain_skeleton([(0, 0, 0), (0, 0, 1)])
    frame = Frame(joint_positions=np.zeros((2, 3)))
    with pytest.raises(MotionError, match="insufficient pose data"):
        forward_kinematics(skel, frame)


def test_fk_preserves_bone_lengths():
    for seed in range(5):
        m = random_rotation_motion(4, seed)
        pos = fk_positions(m)
        skel = m.skeleton
        for j in skel.non_root_joints:
            lengths = np.linalg.norm(pos[:, j] - pos[:, skel.parents[j]], axis=-1)
            assert np.allclose(lengths, np.linalg.norm(skel.rest_offsets[j]), atol=1e-6)


def test_joint_world_positions_prefers_stored():
    skel = chain_skeleton([(0, 0, 0), (0, 0, 1)])
    stored = np.arange(12, dtype=float).reshape(2, 2, 3)
    m = MotionSequence(fps=20, skeleton=skel, joint_pos=stored)
    assert np.array_equal(joint_world_positions(m), stored)


# resample ----------------------------------------------------------------

def test_resample_16_to_20_fps_frame_count():
    m = rest_motion(default_skeleton(), 81, fps=16.0)
    r = resample(m, 20.0)
    assert r.num_frames == 101
    assert r.fps == 20.0
    assert np.isclose(r.duration, 5.0)


def test_resample_same_fps_is_identity():
    m = walk_motion(40)
    r = resample(m, m.fps)
    assert r.num_frames == m.num_frames
    assert np.array_equal(r.root_t, m.root_t)
    assert np.array_equal(r.root_q, m.root_q)
    assert np.array_equal(r.joint_q, m.joint_q)


def test_resample_midpoint_is_mean_of_endpoints():
    skel = chain_skeleton([(0, 0, 0), (0, 0, 1)])
    m = MotionSequence(
        fps=10.0,
        skeleton=skel,
        root_t=np.array([[0.0, 0, 0], [1.0, 2.0, 0]]),
        root_q=quat.identity((2,)),
        joint_q=quat.identity((2, 1)),
    )
    r = resample(m, 20.0)
    assert r.num_frames == 3
    assert np.allclose(r.root_t[1], [0.5, 1.0, 0.0])
    assert np.array_equal(r.root_t[0], m.root_t[0])
    assert np.array_equal(r.root_t[2], m.root_t[1])


def test_resample_round_trip_on_piecewise_linear():
    m = walk_motion(41)
    back = resample(resample(m, 40.0), 20.0)
    assert back.num_frames == m.num_frames
    assert np.abs(back.root_t - m.root_t).max() < 1e-5
    assert np.abs(back.joint_q - m.joint_q).max() < 1e-5


def test_resample_single_frame_errors():
    m = rest_motion(default_skeleton(), 1)
    with pytest.raises(MotionError, match="resample"):
        resample(m, 20.0)


def test_resample_duration_within_one_target_period():
    for num_frames, fps, target in ((33, 20.0, 7.0), (50, 30.0, 11.0), (10, 20.0, 60.0), (2, 20.0, 1.0)):
        m = walk_motion(num_frames, fps=fps)
        r = resample(m, target)
        assert abs(r.duration - m.duration) <= 1.0 / target + 1e-12
        assert np.array_equal(r.root_t[0], m.root_t[0])
        assert np.array_equal(r.root_t[-1], m.root_t[-1])


# canonicalize -------------------------------------------------------------

def test_canonicalize_fixed_point():
    m = walk_motion(20)  # already facing +y, root at origin in xy
    c = canonicalize(m)
    assert np.abs(c.root_t - m.root_t).max() < 1e-6
    assert np.abs(np.asarray(c.root_q) - np.asarray(m.root_q)).max() < 1e-6


def test_canonicalize_rotates_plus_x_facing():
    skel = default_skeleton()
    rot = quat.from_axis_angle((0, 0, 1), -np.pi / 2)
    m = MotionSequence(
        fps=20,
        skeleton=skel,
        root_t=np.tile([3.0, -2.0, 0.95], (5, 1)),
        root_q=np.tile(rot, (5, 1)),
        joint_q=quat.identity((5, 21)),
    )
    assert np.allclose(facing_direction(m), [1, 0], atol=1e-12)
    c = canonicalize(m)
    assert np.allclose(facing_direction(c), [0, 1], atol=1e-6)
    assert np.allclose(c.root_t[0][:2], [0, 0], atol=1e-12)
    assert np.allclose(c.root_t[:, 2], 0.95)  # heights unchanged


def test_canonicalize_preserves_pairwise_distances():
    for seed in (3, 4):
        m = random_rotation_motion(6, seed)
        pos_before = fk_positions(m)
        pos_after = fk_positions(canonicalize(m))
        for t in range(m.num_frames):
            d_before = np.linalg.norm(pos_before[t][:, None] - pos_before[t][None], axis=-1)
            d_after = np.linalg.norm(pos_after[t][:, None] - pos_after[t][None], axis=-1)
            assert np.abs(d_before - d_after).max() < 1e-9


def test_canonicalize_idempotent():
    m = random_rotation_motion(8, seed=11)
    c1 = canonicalize(m)
    c2 = canonicalize(c1)
    assert np.abs(np.asarray(c2.root_t) - np.asarray(c1.root_t)).max() < 1e-6
    assert np.abs(np.asarray(c2.root_q) - np.asarray(c1.root_q)).max() < 1e-6


def test_canonicalize_zero_horizontal_flag_off_keeps_position():
    m = random_rotation_motion(5, seed=2)
    c = canonicalize(m, zero_horizontal=False)
    assert np.allclose(c.root_t[0], m.root_t[0], atol=1e-12)


def test_canonicalize_degenerate_facing_errors():
    skel = default_skeleton()
    # Root pitched 90 degrees: forward axis points straight up.
    rot = quat.from_axis_angle((1, 0, 0), np.pi / 2)
    m = MotionSequence(
        fps=20,
        skeleton=skel,
        root_t=np.tile([0, 0, 0.95], (3, 1)),
        root_q=np.tile(rot, (3, 1)),
        joint_q=quat.identity((3, 21)),
    )
    with pytest.raises(MotionError, match="degenerate facing"):
        canonicalize(m)


# gaussian smoothing --------------------------------------------------------

def test_smooth_constant_sequence_unchanged():
    m = rest_motion(default_skeleton(), 30)
    s = gaussian_smooth(m, 2.0)
    assert np.abs(np.asarray(s.root_t) - np.asarray(m.root_t)).max() < 1e-12
    assert np.abs(np.asarray(s.joint_q) - np.asarray(m.joint_q)).max() < 1e-12


def test_smooth_sigma_zero_is_identity():
    m = walk_motion(25)
    s = gaussian_smooth(m, 0.0)
    assert np.array_equal(s.root_t, m.root_t)


def test_smooth_impulse_matches_hand_kernel():
    skel = chain_skeleton([(0, 0, 0), (0, 0, 1)])
    t_len = 21
    pos = np.zeros((t_len, 2, 3))
    pos[10, 0, 0] = 1.0
    m = MotionSequence(fps=20, skeleton=skel, joint_pos=pos)
    s = gaussian_smooth(m, 1.0)

    # Hand-computed normalized kernel, radius 3 at sigma 1.
    taps = np.exp(-0.5 * np.arange(-3, 4) ** 2)
    taps = taps / taps.sum()
    assert np.allclose(s.joint_pos[7:14, 0, 0], taps, atol=1e-12)
    assert np.allclose(s.joint_pos[:7, 0, 0], 0.0)


def test_smooth_constant_rotation_with_sign_flips():
    # q and -q encode the same rotation; smoothing must not average them away
    skel = default_skeleton()
    t_len = 30
    rq = np.tile(quat.from_axis_angle((0, 0, 1), 0.3), (t_len, 1))
    rq[10:20] *= -1.0
    m = MotionSequence(
        fps=20,
        skeleton=skel,
        root_t=np.tile([0, 0, 0.95], (t_len, 1)),
        root_q=rq,
        joint_q=quat.identity((t_len, 21)),
    )
    s = gaussian_smooth(m, 2.0)
    assert quat.geodesic_angle(s.root_q, m.root_q).max() < 1e-9


def test_smooth_negative_sigma_errors():
    with pytest.raises(MotionError):
        gaussian_smooth(rest_motion(default_skeleton(), 5), -1.0)


def test_kernel_sums_to_one():
    for sigma in (0.5, 1.0, 3.7):
        assert np.isclose(gaussian_kernel(sigma).sum(), 1.0, atol=1e-12)


# finite differences ---------------------------------------------------------

def test_finite_difference_linear_trajectory():
    t = np.arange(30) / 20.0
    pos = np.stack([2.0 * t, np.zeros_like(t), np.zeros_like(t)], axis=-1)
    vel = finite_difference(pos, 1, 20.0)
    acc = finite_difference(pos, 2, 20.0)
    assert np.allclose(vel[:, 0], 2.0, atol=1e-9)
    assert np.allclose(acc, 0.0, atol=1e-9)
    assert vel.shape == pos.shape


def test_finite_difference_constant_trajectory():
    pos = np.ones((10, 3))
    assert np.allclose(finite_difference(pos, 1, 20.0), 0.0)


def test_finite_difference_quadratic_acceleration():
    fps = 20.0
    a = 9.81
    t = np.arange(50) / fps
    z = 0.5 * a * t**2
    pos = np.stack([np.zeros_like(z), np.zeros_like(z), z], axis=-1)
    acc = finite_difference(pos, 2, fps)
    assert np.abs(acc[1:-1, 2] - a).max() < 1e-6
    # Boundary frames take the nearest interior value.
    assert np.array_equal(acc[0], acc[1])
    assert np.array_equal(acc[-1], acc[-2])


def test_finite_difference_too_few_frames():
    with pytest.raises(MotionError):
        finite_difference(np.zeros((2, 3)), 2, 20.0)


# perturb ---------------------------------------------------------------------

def test_perturb_sigma_zero_identity():
    m = walk_motion(10)
    assert perturb(m, 0.0, seed=1) is m


def test_perturb_deterministic_per_seed():
    m = walk_motion(10)
    a = perturb(m, 0.05, seed=42)
    b = perturb(m, 0.05, seed=42)
    c = perturb(m, 0.05, seed=43)
    assert np.array_equal(a.root_t, b.root_t)
    assert np.array_equal(a.joint_q, b.joint_q)
    assert not np.array_equal(a.root_t, c.root_t)


def test_perturb_noise_scale_monte_carlo():
    skel = chain_skeleton([(0, 0, 0), (0, 0, 1)])
    t_len = 2000
    pos = np.zeros((t_len, 2, 3))  # 12000 scalar channels
    m = MotionSequence(fps=20, skeleton=skel, joint_pos=pos)
    p = perturb(m, 0.05, seed=9)
    std = np.std(p.joint_pos - pos)
    assert 0.045 <= std <= 0.055


def test_perturb_rms_converges_to_sigma():
    skel = chain_skeleton([(0, 0, 0), (0, 0, 1)])
    t_len = 20000  # 1.2e5 samples
    pos = np.zeros((t_len, 2, 3))
    m = MotionSequence(fps=20, skeleton=skel, joint_pos=pos)
    sigma = 0.1
    p = perturb(m, sigma, seed=10)
    rms = np.sqrt(np.mean((p.joint_pos - pos) ** 2))
    assert abs(rms - sigma) / sigma < 0.01

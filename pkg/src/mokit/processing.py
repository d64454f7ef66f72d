"""Signal-level motion operations: resampling, canonicalization, smoothing,
finite differences, and noise perturbation.

Edge handling is replicate padding throughout, so constant channels are exact
fixed points of smoothing and derivatives carry no spurious boundary spikes.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import quat
from .motion import FORWARD_AXIS, MotionError, MotionSequence


def _sample_times(num_frames: int, fps: float, target_fps: float) -> np.ndarray:
    """Target-frame times in source seconds.

    The new frame count round(duration * target_fps) + 1 keeps the span within
    one target-frame period; sample times are clamped to the source span and
    the last sample is pinned to the final source frame so endpoints survive
    exactly.
    """
    duration = (num_frames - 1) / fps
    new_count = max(2, int(round(duration * target_fps)) + 1)
    times = np.minimum(np.arange(new_count) / target_fps, duration)
    times[-1] = duration
    return times


def _interp_linear(values: np.ndarray, idx: np.ndarray, frac: np.ndarray) -> np.ndarray:
    lo = values[idx]
    hi = values[np.minimum(idx + 1, values.shape[0] - 1)]
    f = frac.reshape((-1,) + (1,) * (values.ndim - 1))
    return (1.0 - f) * lo + f * hi


def _interp_slerp(quats: np.ndarray, idx: np.ndarray, frac: np.ndarray) -> np.ndarray:
    lo = quats[idx]
    hi = quats[np.minimum(idx + 1, quats.shape[0] - 1)]
    f = frac.reshape((-1,) + (1,) * (quats.ndim - 2))
    out = quat.slerp(lo, hi, np.broadcast_to(f, lo.shape[:-1]))
    # Exact hits copy the source frame bit-for-bit (slerp would renormalize
    # and possibly sign-flip them).
    out[frac == 0.0] = lo[frac == 0.0]
    out[frac == 1.0] = hi[frac == 1.0]
    return out


def resample(motion: MotionSequence, target_fps: float) -> MotionSequence:
    """Re-time the clip to target_fps.

    Positions and translations are linearly interpolated, rotations by
    shortest-arc slerp between the bracketing source frames. First and last
    frames are preserved exactly.
    """
    if not target_fps > 0:
        raise MotionError("target_fps must be > 0")
    if motion.num_frames < 2:
        raise MotionError("cannot resample a single-frame motion")

    times = _sample_times(motion.num_frames, motion.fps, target_fps)
    src = times * motion.fps
    idx = np.minimum(src.astype(int), motion.num_frames - 2)
    frac = src - idx
    # Snap endpoints so the first/last output frames are bit-identical copies.
    frac[0], idx[0] = 0.0, 0
    frac[-1], idx[-1] = 1.0, motion.num_frames - 2

    lin = lambda a: None if a is None else _interp_linear(a, idx, frac)
    rot = lambda a: None if a is None else _interp_slerp(a, idx, frac)
    return motion.with_(
        fps=float(target_fps),
        root_t=lin(motion.root_t),
        root_q=rot(motion.root_q),
        joint_q=rot(motion.joint_q),
        joint_pos=lin(motion.joint_pos),
    )


def facing_direction(motion: MotionSequence, frame_index: int = 0) -> np.ndarray:
    """Horizontal (x, y) projection of the root frame's forward (+y) axis."""
    if motion.root_q is None:
        raise MotionError("facing direction needs a root orientation")
    forward = quat.rotate(motion.root_q[frame_index], FORWARD_AXIS)
    return forward[:2]


def canonicalize(
    motion: MotionSequence,
    zero_horizontal: bool = True,
    facing_fn: Callable[[MotionSequence], np.ndarray] | None = None,
) -> MotionSequence:
    """Rotate the whole clip about +z so the first frame faces +y.

    A single rigid transform: heights and all pairwise distances are
    preserved. The rotation pivots about the first frame's root so the clip
    stays in place; with zero_horizontal the first-frame root (x, y) is then
    translated to the origin. facing_fn may replace the default root-forward
    facing estimate (it must return a horizontal (x, y) vector).
    """
    fn = facing_fn if facing_fn is not None else facing_direction
    facing = np.asarray(fn(motion), dtype=float)
    norm = np.linalg.norm(facing)
    if norm <= 1e-6:
        raise MotionError("degenerate facing: first frame's forward axis is vertical")
    facing = facing / norm

    # Angle rotating `facing` onto +y about +z.
    angle = np.arctan2(facing[0], facing[1])
    rot = quat.from_axis_angle((0.0, 0.0, 1.0), angle)

    if motion.root_t is not None:
        pivot = motion.root_t[0].copy()
    elif motion.joint_pos is not None:
        pivot = motion.joint_pos[0, motion.skeleton.root].copy()
    else:  # unreachable: sequences always carry one of the two
        raise MotionError("motion has neither root translation nor joint positions")
    pivot[2] = 0.0

    def transform_points(points: np.ndarray | None) -> np.ndarray | None:
        if points is None:
            return None
        out = quat.rotate(rot, points - pivot) + pivot
        if zero_horizontal:
            out = out - np.array([pivot[0], pivot[1], 0.0])
        return out

    root_q = motion.root_q
    if root_q is not None:
        root_q = quat.normalize(quat.multiply(rot, root_q))
    return motion.with_(
        root_t=transform_points(motion.root_t),
        root_q=root_q,
        joint_pos=transform_points(motion.joint_pos),
    )


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized Gaussian taps truncated at 3 sigma (always odd length)."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    radius = int(np.ceil(3.0 * sigma))
    if sigma == 0 or radius == 0:
        return np.array([1.0])
    x = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _smooth_channels(arr: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    radius = len(kernel) // 2
    if radius == 0:
        return arr.copy()
    flat = arr.reshape(arr.shape[0], -1)
    padded = np.pad(flat, ((radius, radius), (0, 0)), mode="edge")
    out = np.empty_like(flat)
    for c in range(flat.shape[1]):
        out[:, c] = np.convolve(padded[:, c], kernel, mode="valid")
    return out.reshape(arr.shape)


def gaussian_smooth(motion: MotionSequence, sigma_frames: float) -> MotionSequence:
    """Temporal Gaussian smoothing of every channel.

    Positional channels are convolved directly; quaternions are hemisphere-
    aligned, smoothed componentwise, and renormalized. sigma 0 is the
    identity.
    """
    if sigma_frames < 0:
        raise MotionError("sigma_frames must be >= 0")
    kernel = gaussian_kernel(sigma_frames)
    if len(kernel) == 1:
        return motion

    smooth = lambda a: None if a is None else _smooth_channels(a, kernel)
    smooth_q = lambda a: None if a is None else quat.normalize(
        _smooth_channels(quat.align_signs(a), kernel)
    )
    return motion.with_(
        root_t=smooth(motion.root_t),
        root_q=smooth_q(motion.root_q),
        joint_q=smooth_q(motion.joint_q),
        joint_pos=smooth(motion.joint_pos),
    )


def finite_difference(positions: np.ndarray, order: int, fps: float) -> np.ndarray:
    """Per-frame derivative of a (T, ..., 3) position array.

    order 1: central differences in the interior, one-sided at the ends (m/s).
    order 2: second central difference (m/s^2); the two boundary frames take
    the nearest interior value. Output shape equals input shape.
    """
    positions = np.asarray(positions, dtype=float)
    t = positions.shape[0]
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if t <= order:
        raise MotionError(f"need more than {order} frames for order-{order} differences")

    out = np.empty_like(positions)
    if order == 1:
        out[1:-1] = (positions[2:] - positions[:-2]) * (0.5 * fps)
        out[0] = (positions[1] - positions[0]) * fps
        out[-1] = (positions[-1] - positions[-2]) * fps
    else:
        out[1:-1] = (positions[2:] - 2.0 * positions[1:-1] + positions[:-2]) * (fps * fps)
        out[0] = out[1]
        out[-1] = out[-2]
    return out


def perturb(motion: MotionSequence, sigma: float, seed: int) -> MotionSequence:
    """Add i.i.d. Gaussian noise of std sigma to every channel.

    Translations and positions are perturbed in meters; rotation components
    are perturbed then renormalized. Deterministic for a fixed seed.
    """
    if sigma < 0:
        raise MotionError("sigma must be >= 0")
    if sigma == 0:
        return motion
    rng = np.random.default_rng(seed)
    noisy = lambda a: None if a is None else a + rng.normal(0.0, sigma, size=a.shape)
    noisy_q = lambda a: None if a is None else quat.normalize(a + rng.normal(0.0, sigma, size=a.shape))
    return motion.with_(
        root_t=noisy(motion.root_t),
        root_q=noisy_q(motion.root_q),
        joint_q=noisy_q(motion.joint_q),
        joint_pos=noisy(motion.joint_pos),
    )

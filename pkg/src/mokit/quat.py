"""Unit quaternion helpers.

Quaternions are stored as float64 arrays in (w, x, y, z) order. All functions
broadcast over leading dimensions, so a single quaternion has shape (4,) and a
sequence of per-joint rotations has shape (T, J, 4).
"""

from __future__ import annotations

import numpy as np

EPS = 1e-12


def identity(shape: tuple[int, ...] = ()) -> np.ndarray:
    """Identity rotation(s) with the given leading shape."""
    q = np.zeros(shape + (4,))
    q[..., 0] = 1.0
    return q


def normalize(q: np.ndarray) -> np.ndarray:
    """Scale to unit norm. Raises on (near-)zero quaternions."""
    q = np.asarray(q, dtype=float)
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(norm < EPS):
        raise ValueError("cannot normalize zero-norm quaternion")
    return q / norm


def multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a * b (apply b first, then a when rotating vectors)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def conjugate(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector(s) v by unit quaternion(s) q."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    qvec = q[..., 1:]
    uv = np.cross(qvec, v)
    uuv = np.cross(qvec, uv)
    return v + 2.0 * (q[..., :1] * uv + uuv)


def from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * float(angle)
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix/matrices, shape (..., 3, 3)."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    row0 = np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], axis=-1)
    row1 = np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], axis=-1)
    row2 = np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], axis=-1)
    return np.stack([row0, row1, row2], axis=-2)


def slerp(q0: np.ndarray, q1: np.ndarray, u) -> np.ndarray:
    """Shortest-arc spherical interpolation between unit quaternions.

    u may be a scalar or broadcast against the leading dimensions of q0/q1.
    Falls back to normalized lerp when the arc is nearly degenerate.
    """
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    u = np.asarray(u, dtype=float)[..., None]

    dot = np.sum(q0 * q1, axis=-1, keepdims=True)
    q1 = np.where(dot < 0.0, -q1, q1)
    dot = np.abs(dot)

    dot = np.clip(dot, -1.0, 1.0)
    theta = np.arccos(dot)
    sin_theta = np.sin(theta)
    near = sin_theta < 1e-6

    with np.errstate(divide="ignore", invalid="ignore"):
        w0 = np.where(near, 1.0 - u, np.sin((1.0 - u) * theta) / sin_theta)
        w1 = np.where(near, u, np.sin(u * theta) / sin_theta)
    out = w0 * q0 + w1 * q1
    return normalize(out)


def align_signs(q: np.ndarray) -> np.ndarray:
    """Flip signs along axis 0 so consecutive quaternions share a hemisphere.

    q and -q encode the same rotation; alignment makes componentwise
    averaging and interpolation safe across sign flips.
    """
    q = np.array(q, dtype=float)
    for i in range(1, q.shape[0]):
        dots = np.sum(q[i] * q[i - 1], axis=-1, keepdims=True)
        q[i] = np.where(dots < 0.0, -q[i], q[i])
    return q


def geodesic_angle(q0: np.ndarray, q1: np.ndarray) -> np.ndarray:
    """Rotation angle in [0, pi] taking q0 to q1, sign-ambiguity resolved."""
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    dot = np.clip(np.abs(np.sum(q0 * q1, axis=-1)), 0.0, 1.0)
    return 2.0 * np.arccos(dot)


def swing_twist(q: np.ndarray, axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decompose q into swing * twist where twist rotates about `axis`.

    Returns (swing, twist) as unit quaternions. For rotations perpendicular to
    the axis the twist is the identity.
    """
    q = np.asarray(q, dtype=float)
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis, axis=-1, keepdims=True)
    proj = np.sum(q[..., 1:] * axis, axis=-1, keepdims=True) * axis
    twist = np.concatenate([q[..., :1], proj], axis=-1)
    norm = np.linalg.norm(twist, axis=-1, keepdims=True)
    # q orthogonal to axis with w == 0 gives a zero twist vector: use identity.
    degenerate = norm < EPS
    twist = np.where(degenerate, identity(twist.shape[:-1]), twist / np.where(degenerate, 1.0, norm))
    swing = multiply(q, conjugate(twist))
    return normalize(swing), twist

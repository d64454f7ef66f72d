"""Vectorized numpy implementation of the distance kernels.

Mirrors the compiled extension operation-for-operation (same clamping
sequence, same degeneracy guards) so the two backends agree to floating-point
noise and can be swapped freely.
"""

from __future__ import annotations

import numpy as np

DEGENERATE_EPS = 1e-12


def segseg_distances(a0, a1, b0, b1) -> np.ndarray:
    """Minimum distances between segments [a0, a1] and [b0, b1].

    All inputs are (..., 3) arrays; returns (...,) distances. Exact for
    parallel and degenerate (point) segments.
    """
    a0 = np.asarray(a0, dtype=float)
    a1 = np.asarray(a1, dtype=float)
    b0 = np.asarray(b0, dtype=float)
    b1 = np.asarray(b1, dtype=float)

    d1 = a1 - a0
    d2 = b1 - b0
    r = a0 - b0
    a = np.sum(d1 * d1, axis=-1)
    e = np.sum(d2 * d2, axis=-1)
    f = np.sum(d2 * r, axis=-1)
    c = np.sum(d1 * r, axis=-1)
    b = np.sum(d1 * d2, axis=-1)

    a_deg = a <= DEGENERATE_EPS
    e_deg = e <= DEGENERATE_EPS
    a_safe = np.where(a_deg, 1.0, a)
    e_safe = np.where(e_deg, 1.0, e)

    denom = a * e - b * b
    denom_safe = np.where(denom <= DEGENERATE_EPS, 1.0, denom)
    s = np.where(denom <= DEGENERATE_EPS, 0.0, np.clip((b * f - c * e) / denom_safe, 0.0, 1.0))

    t = (b * s + f) / e_safe
    s = np.where(t < 0.0, np.clip(-c / a_safe, 0.0, 1.0), s)
    s = np.where(t > 1.0, np.clip((b - c) / a_safe, 0.0, 1.0), s)
    t = np.clip(t, 0.0, 1.0)

    # Degenerate segments: point-vs-segment and point-vs-point.
    s = np.where(a_deg, 0.0, s)
    t = np.where(a_deg, np.clip(f / e_safe, 0.0, 1.0), t)
    t_b_deg = 0.0
    s_b_deg = np.clip(-c / a_safe, 0.0, 1.0)
    t = np.where(e_deg, t_b_deg, t)
    s = np.where(e_deg & ~a_deg, s_b_deg, s)
    s = np.where(a_deg & e_deg, 0.0, s)

    p1 = a0 + s[..., None] * d1
    p2 = b0 + t[..., None] * d2
    return np.linalg.norm(p1 - p2, axis=-1)


def capsule_pair_distances(starts, ends, radii, pair_a, pair_b) -> np.ndarray:
    """Surface distances between capsule pairs; negative means penetration.

    starts/ends: (B, 3) or (F, B, 3) bone segment endpoints; radii: (B,);
    pair_a/pair_b: (P,) bone indices. Returns (P,) or (F, P).
    """
    starts = np.asarray(starts, dtype=float)
    ends = np.asarray(ends, dtype=float)
    radii = np.asarray(radii, dtype=float)
    pair_a = np.asarray(pair_a, dtype=int)
    pair_b = np.asarray(pair_b, dtype=int)
    dist = segseg_distances(
        starts[..., pair_a, :],
        ends[..., pair_a, :],
        starts[..., pair_b, :],
        ends[..., pair_b, :],
    )
    return dist - (radii[pair_a] + radii[pair_b])

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled distance kernels: segment-segment closest distance and batched
capsule-pair surface distances. Arithmetic matches the numpy fallback."""

from libc.math cimport sqrt

import numpy as np

DEF DEGENERATE_EPS = 1e-12


cdef inline double _clamp01(double v) nogil:
    if v < 0.0:
        return 0.0
    if v > 1.0:
        return 1.0
    return v


cdef inline double _segseg(
    double a0x, double a0y, double a0z,
    double a1x, double a1y, double a1z,
    double b0x, double b0y, double b0z,
    double b1x, double b1y, double b1z,
) nogil:
    cdef double d1x = a1x - a0x, d1y = a1y - a0y, d1z = a1z - a0z
    cdef double d2x = b1x - b0x, d2y = b1y - b0y, d2z = b1z - b0z
    cdef double rx = a0x - b0x, ry = a0y - b0y, rz = a0z - b0z
    cdef double a = d1x * d1x + d1y * d1y + d1z * d1z
    cdef double e = d2x * d2x + d2y * d2y + d2z * d2z
    cdef double f = d2x * rx + d2y * ry + d2z * rz
    cdef double c, b, denom, s, t
    cdef double px, py, pz

    if a <= DEGENERATE_EPS and e <= DEGENERATE_EPS:
        s = 0.0
        t = 0.0
    elif a <= DEGENERATE_EPS:
        s = 0.0
        t = _clamp01(f / e)
    else:
        c = d1x * rx + d1y * ry + d1z * rz
        if e <= DEGENERATE_EPS:
            t = 0.0
            s = _clamp01(-c / a)
        else:
            b = d1x * d2x + d1y * d2y + d1z * d2z
            denom = a * e - b * b
            if denom > DEGENERATE_EPS:
                s = _clamp01((b * f - c * e) / denom)
            else:
                s = 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = _clamp01(-c / a)
            elif t > 1.0:
                t = 1.0
                s = _clamp01((b - c) / a)

    px = rx + s * d1x - t * d2x
    py = ry + s * d1y - t * d2y
    pz = rz + s * d1z - t * d2z
    return sqrt(px * px + py * py + pz * pz)


def segseg_distances(a0, a1, b0, b1):
    """Minimum distances between segment batches, inputs (N, 3)."""
    cdef const double[:, ::1] va0 = np.ascontiguousarray(a0, dtype=np.float64)
    cdef const double[:, ::1] va1 = np.ascontiguousarray(a1, dtype=np.float64)
    cdef const double[:, ::1] vb0 = np.ascontiguousarray(b0, dtype=np.float64)
    cdef const double[:, ::1] vb1 = np.ascontiguousarray(b1, dtype=np.float64)
    cdef Py_ssize_t n = va0.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] vout = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            vout[i] = _segseg(
                va0[i, 0], va0[i, 1], va0[i, 2],
                va1[i, 0], va1[i, 1], va1[i, 2],
                vb0[i, 0], vb0[i, 1], vb0[i, 2],
                vb1[i, 0], vb1[i, 1], vb1[i, 2],
            )
    return out


def capsule_pair_distances(starts, ends, radii, pair_a, pair_b):
    """Surface distances for capsule pairs over one frame or a frame batch.

    starts/ends: (B, 3) or (F, B, 3); radii: (B,); pair_a/pair_b: (P,).
    Returns (P,) or (F, P); negative values are penetration depths.
    """
    starts_arr = np.ascontiguousarray(starts, dtype=np.float64)
    ends_arr = np.ascontiguousarray(ends, dtype=np.float64)
    single = starts_arr.ndim == 2
    if single:
        starts_arr = starts_arr[None]
        ends_arr = ends_arr[None]

    cdef const double[:, :, ::1] vs = starts_arr
    cdef const double[:, :, ::1] ve = ends_arr
    cdef const double[::1] vr = np.ascontiguousarray(radii, dtype=np.float64)
    cdef const Py_ssize_t[::1] ia = np.ascontiguousarray(pair_a, dtype=np.intp)
    cdef const Py_ssize_t[::1] ib = np.ascontiguousarray(pair_b, dtype=np.intp)
    cdef Py_ssize_t nf = vs.shape[0]
    cdef Py_ssize_t np_ = ia.shape[0]
    out = np.empty((nf, np_), dtype=np.float64)
    cdef double[:, ::1] vout = out
    cdef Py_ssize_t fi, pi, a, b
    with nogil:
        for fi in range(nf):
            for pi in range(np_):
                a = ia[pi]
                b = ib[pi]
                vout[fi, pi] = _segseg(
                    vs[fi, a, 0], vs[fi, a, 1], vs[fi, a, 2],
                    ve[fi, a, 0], ve[fi, a, 1], ve[fi, a, 2],
                    vs[fi, b, 0], vs[fi, b, 1], vs[fi, b, 2],
                    ve[fi, b, 0], ve[fi, b, 1], ve[fi, b, 2],
                ) - (vr[a] + vr[b])
    return out[0] if single else out

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stencil kernels for walled boxes.

Every routine works on 3-D arrays; lower-dimensional fields are padded
with singleton axes by the caller and get ``inv_h = 0`` on the missing
axes.  Operation order matches ``numpy_kernels`` so both back ends agree
to rounding.
"""
from cython.parallel cimport prange
from libc.math cimport pow, fabs, sqrt

import numpy as np

cdef int _nthreads = 1


def set_num_threads(int n):
    global _nthreads
    _nthreads = n if n > 0 else 1


def get_num_threads():
    return _nthreads


def laplacian(const double[:, :, ::1] f, double ih0, double ih1, double ih2, double[:, :, ::1] out):
    cdef Py_ssize_t n0 = f.shape[0], n1 = f.shape[1], n2 = f.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double fc, gp, gm, acc
    for i in prange(n0, nogil=True, num_threads=_nthreads, schedule="static"):
        for j in range(n1):
            for k in range(n2):
                fc = f[i, j, k]
                gp = (f[i + 1, j, k] - fc) * ih0 if i + 1 < n0 else 0.0
                gm = (fc - f[i - 1, j, k]) * ih0 if i > 0 else 0.0
                acc = (gp - gm) * ih0
                gp = (f[i, j + 1, k] - fc) * ih1 if j + 1 < n1 else 0.0
                gm = (fc - f[i, j - 1, k]) * ih1 if j > 0 else 0.0
                acc = acc + (gp - gm) * ih1
                gp = (f[i, j, k + 1] - fc) * ih2 if k + 1 < n2 else 0.0
                gm = (fc - f[i, j, k - 1]) * ih2 if k > 0 else 0.0
                acc = acc + (gp - gm) * ih2
                out[i, j, k] = acc


def div(const double[:, :, ::1] F0, const double[:, :, ::1] F1, const double[:, :, ::1] F2,
        double ih0, double ih1, double ih2, double[:, :, ::1] out):
    cdef Py_ssize_t n0 = out.shape[0], n1 = out.shape[1], n2 = out.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double acc
    for i in prange(n0, nogil=True, num_threads=_nthreads, schedule="static"):
        for j in range(n1):
            for k in range(n2):
                acc = (F0[i + 1, j, k] - F0[i, j, k]) * ih0
                acc = acc + (F1[i, j + 1, k] - F1[i, j, k]) * ih1
                acc = acc + (F2[i, j, k + 1] - F2[i, j, k]) * ih2
                out[i, j, k] = acc


cdef inline double _up(double v, double left, double right) noexcept nogil:
    # branchless upwind select (fmax/fmin would be libm calls); one product
    # is exactly zero, so the sum equals ``v * left`` or ``v * right``
    return (v if v > 0.0 else 0.0) * left + (v if v < 0.0 else 0.0) * right


def advect(const double[:, :, ::1] f, const double[:, :, ::1] u0, const double[:, :, ::1] u1,
           const double[:, :, ::1] u2, double ih0, double ih1, double ih2, double[:, :, ::1] out):
    cdef Py_ssize_t n0 = f.shape[0], n1 = f.shape[1], n2 = f.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double fp, fm, acc, fc
    for i in prange(n0, nogil=True, num_threads=_nthreads, schedule="static"):
        for j in range(n1):
            for k in range(n2):
                fc = f[i, j, k]
                fp = _up(u0[i + 1, j, k], fc, f[i + 1, j, k]) if i + 1 < n0 else 0.0
                fm = _up(u0[i, j, k], f[i - 1, j, k], fc) if i > 0 else 0.0
                acc = (fp - fm) * ih0
                fp = _up(u1[i, j + 1, k], fc, f[i, j + 1, k]) if j + 1 < n1 else 0.0
                fm = _up(u1[i, j, k], f[i, j - 1, k], fc) if j > 0 else 0.0
                acc = acc + (fp - fm) * ih1
                fp = _up(u2[i, j, k + 1], fc, f[i, j, k + 1]) if k + 1 < n2 else 0.0
                fm = _up(u2[i, j, k], f[i, j, k - 1], fc) if k > 0 else 0.0
                acc = acc + (fp - fm) * ih2
                out[i, j, k] = acc


cdef inline double _limiter(double x, double expo) noexcept nogil:
    # pow dominates the drift kernels; theta = 1, 2 and 0 have cheap forms
    if expo == -0.5:
        return 1.0 / sqrt(x)
    if expo == -1.0:
        return 1.0 / x
    if expo == 0.0:
        return 1.0
    return pow(x, expo)


cdef void _tangential(const double[:, :, ::1] c, double ih0, double ih1, double ih2,
                      double[:, :, ::1] T0, double[:, :, ::1] T1, double[:, :, ::1] T2) noexcept nogil:
    """Cell mean of the two face gradients along each axis (wall faces 0)."""
    cdef Py_ssize_t n0 = c.shape[0], n1 = c.shape[1], n2 = c.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double gp, gm, fc
    for i in prange(n0, num_threads=_nthreads, schedule="static"):
        for j in range(n1):
            for k in range(n2):
                fc = c[i, j, k]
                gp = (c[i + 1, j, k] - fc) * ih0 if i + 1 < n0 else 0.0
                gm = (fc - c[i - 1, j, k]) * ih0 if i > 0 else 0.0
                T0[i, j, k] = 0.5 * (gm + gp)
                gp = (c[i, j + 1, k] - fc) * ih1 if j + 1 < n1 else 0.0
                gm = (fc - c[i, j - 1, k]) * ih1 if j > 0 else 0.0
                T1[i, j, k] = 0.5 * (gm + gp)
                gp = (c[i, j, k + 1] - fc) * ih2 if k + 1 < n2 else 0.0
                gm = (fc - c[i, j, k - 1]) * ih2 if k > 0 else 0.0
                T2[i, j, k] = 0.5 * (gm + gp)


cdef void _chemo_vel(const double[:, :, ::1] c, double k_s, double expo,
                     double ih0, double ih1, double ih2,
                     const double[:, :, ::1] T0, const double[:, :, ::1] T1, const double[:, :, ::1] T2,
                     double[:, :, ::1] V0, double[:, :, ::1] V1, double[:, :, ::1] V2) noexcept nogil:
    cdef Py_ssize_t n0 = c.shape[0], n1 = c.shape[1], n2 = c.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double dc, g2, t1, t2
    # axis 0 faces
    for i in prange(1, n0, num_threads=_nthreads, schedule="static"):
        for j in range(n1):
            for k in range(n2):
                dc = (c[i, j, k] - c[i - 1, j, k]) * ih0
                t1 = 0.5 * (T1[i - 1, j, k] + T1[i, j, k])
                t2 = 0.5 * (T2[i - 1, j, k] + T2[i, j, k])
                g2 = dc * dc
                g2 = g2 + t1 * t1
                g2 = g2 + t2 * t2
                V0[i, j, k] = k_s * _limiter(1.0 + g2, expo) * dc
    for i in prange(n0, num_threads=_nthreads, schedule="static"):
        for j in range(1, n1):
            for k in range(n2):
                dc = (c[i, j, k] - c[i, j - 1, k]) * ih1
                t1 = 0.5 * (T0[i, j - 1, k] + T0[i, j, k])
                t2 = 0.5 * (T2[i, j - 1, k] + T2[i, j, k])
                g2 = dc * dc
                g2 = g2 + t1 * t1
                g2 = g2 + t2 * t2
                V1[i, j, k] = k_s * _limiter(1.0 + g2, expo) * dc
        for j in range(n1):
            for k in range(1, n2):
                dc = (c[i, j, k] - c[i, j, k - 1]) * ih2
                t1 = 0.5 * (T0[i, j, k - 1] + T0[i, j, k])
                t2 = 0.5 * (T1[i, j, k - 1] + T1[i, j, k])
                g2 = dc * dc
                g2 = g2 + t1 * t1
                g2 = g2 + t2 * t2
                V2[i, j, k] = k_s * _limiter(1.0 + g2, expo) * dc


def chemo_velocity(const double[:, :, ::1] c, double k_s, double theta,
                   double ih0, double ih1, double ih2,
                   double[:, :, ::1] V0, double[:, :, ::1] V1, double[:, :, ::1] V2):
    """Fill face drift ``S(g2) * dc`` for the prototype limiter (wall faces untouched)."""
    cdef Py_ssize_t n0 = c.shape[0], n1 = c.shape[1], n2 = c.shape[2]
    T0 = np.empty((n0, n1, n2))
    T1 = np.empty((n0, n1, n2))
    T2 = np.empty((n0, n1, n2))
    cdef double[:, :, ::1] t0 = T0, t1 = T1, t2 = T2
    with nogil:
        _tangential(c, ih0, ih1, ih2, t0, t1, t2)
        _chemo_vel(c, k_s, -0.5 * theta, ih0, ih1, ih2, t0, t1, t2, V0, V1, V2)


def chemo_div(const double[:, :, ::1] n, const double[:, :, ::1] c, double k_s, double theta,
              double ih0, double ih1, double ih2, double[:, :, ::1] out):
    cdef Py_ssize_t n0 = c.shape[0], n1 = c.shape[1], n2 = c.shape[2]
    V0 = np.zeros((n0 + 1, n1, n2))
    V1 = np.zeros((n0, n1 + 1, n2))
    V2 = np.zeros((n0, n1, n2 + 1))
    chemo_velocity(c, k_s, theta, ih0, ih1, ih2, V0, V1, V2)
    advect(n, V0, V1, V2, ih0, ih1, ih2, out)


def face_speeds(const double[:, :, ::1] c, const double[:, :, ::1] u0, const double[:, :, ::1] u1,
                const double[:, :, ::1] u2, double k_s, double theta,
                double ih0, double ih1, double ih2):
    cdef Py_ssize_t n0 = c.shape[0], n1 = c.shape[1], n2 = c.shape[2]
    V0 = np.zeros((n0 + 1, n1, n2))
    V1 = np.zeros((n0, n1 + 1, n2))
    V2 = np.zeros((n0, n1, n2 + 1))
    chemo_velocity(c, k_s, theta, ih0, ih1, ih2, V0, V1, V2)
    cdef double[:, :, ::1] v0 = V0, v1 = V1, v2 = V2
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s
    cdef Py_ssize_t i, j, k
    with nogil:
        for i in range(n0 + 1):
            for j in range(n1):
                for k in range(n2):
                    s = fabs(v0[i, j, k]) + fabs(u0[i, j, k])
                    if s > s0:
                        s0 = s
        for i in range(n0):
            for j in range(n1 + 1):
                for k in range(n2):
                    s = fabs(v1[i, j, k]) + fabs(u1[i, j, k])
                    if s > s1:
                        s1 = s
        for i in range(n0):
            for j in range(n1):
                for k in range(n2 + 1):
                    s = fabs(v2[i, j, k]) + fabs(u2[i, j, k])
                    if s > s2:
                        s2 = s
    return s0, s1, s2


def mac_laplacian(const double[:, :, ::1] u, int axis, double ih0, double ih1, double ih2,
                  double[:, :, ::1] out):
    """Vector Laplacian of one MAC component; ``axis`` is its normal direction."""
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], n2 = u.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double a0 = ih0 * ih0, a1 = ih1 * ih1, a2 = ih2 * ih2
    cdef double uc, up, um, acc
    for i in prange(n0, nogil=True, num_threads=_nthreads, schedule="static"):
        for j in range(n1):
            for k in range(n2):
                if (axis == 0 and (i == 0 or i == n0 - 1)) or \
                   (axis == 1 and (j == 0 or j == n1 - 1)) or \
                   (axis == 2 and (k == 0 or k == n2 - 1)):
                    out[i, j, k] = 0.0
                    continue
                uc = u[i, j, k]
                up = u[i + 1, j, k] if i + 1 < n0 else -uc
                um = u[i - 1, j, k] if i > 0 else -uc
                acc = 0.0 + (up - 2.0 * uc + um) * a0
                up = u[i, j + 1, k] if j + 1 < n1 else -uc
                um = u[i, j - 1, k] if j > 0 else -uc
                acc = acc + (up - 2.0 * uc + um) * a1
                up = u[i, j, k + 1] if k + 1 < n2 else -uc
                um = u[i, j, k - 1] if k > 0 else -uc
                acc = acc + (up - 2.0 * uc + um) * a2
                out[i, j, k] = acc

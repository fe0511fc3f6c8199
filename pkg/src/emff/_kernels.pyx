# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 integrator for dipole n-body dynamics over one control window."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, sqrt

cnp.import_array()

cdef double C0 = 3e-7


cdef int _accel(double[:, ::1] pos, double[:, ::1] vel, double[::1] mass, double[::1] damping,
                double[:, :, ::1] amp, double[:, ::1] omega, double t, double min_sep,
                double[:, ::1] mom, double[:, ::1] acc) noexcept nogil:
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t ntone = omega.shape[1]
    cdef Py_ssize_t i, j, k, c
    cdef double s, rx, ry, rz, dist2, dist, inv, hx, hy, hz, a, b, uu, scale, fx, fy, fz
    for i in range(n):
        mom[i, 0] = 0.0
        mom[i, 1] = 0.0
        mom[i, 2] = 0.0
        for k in range(ntone):
            if omega[i, k] != 0.0:
                s = sin(omega[i, k] * t)
                for c in range(3):
                    mom[i, c] += amp[i, k, c] * s
        for c in range(3):
            acc[i, c] = -damping[i] * vel[i, c]
    for i in range(n):
        for j in range(i + 1, n):
            rx = pos[i, 0] - pos[j, 0]
            ry = pos[i, 1] - pos[j, 1]
            rz = pos[i, 2] - pos[j, 2]
            dist2 = rx * rx + ry * ry + rz * rz
            dist = sqrt(dist2)
            if not dist >= min_sep:
                return -1
            inv = 1.0 / dist
            hx = rx * inv
            hy = ry * inv
            hz = rz * inv
            a = mom[i, 0] * hx + mom[i, 1] * hy + mom[i, 2] * hz
            b = mom[j, 0] * hx + mom[j, 1] * hy + mom[j, 2] * hz
            uu = mom[i, 0] * mom[j, 0] + mom[i, 1] * mom[j, 1] + mom[i, 2] * mom[j, 2]
            scale = C0 / (dist2 * dist2)
            fx = scale * (b * mom[i, 0] + a * mom[j, 0] + (uu - 5.0 * a * b) * hx)
            fy = scale * (b * mom[i, 1] + a * mom[j, 1] + (uu - 5.0 * a * b) * hy)
            fz = scale * (b * mom[i, 2] + a * mom[j, 2] + (uu - 5.0 * a * b) * hz)
            acc[i, 0] += fx
            acc[i, 1] += fy
            acc[i, 2] += fz
            acc[j, 0] -= fx
            acc[j, 1] -= fy
            acc[j, 2] -= fz
    for i in range(n):
        for c in range(3):
            acc[i, c] /= mass[i]
    return 0


def integrate_window(pos0, vel0, mass, damping, amp, omega, double t0, double dt, int nsub,
                     double min_sep, traj=None):
    """Advance ``nsub`` RK4 steps of size ``dt`` from ``t0``.

    ``amp[i, k]`` is the moment amplitude of tone ``k`` on satellite ``i``
    with angular frequency ``omega[i, k]``. Returns ``(pos, vel, step)``
    where ``step`` is ``nsub`` on success or the index of the sub-step at
    which two bodies came closer than ``min_sep``.
    """
    cdef double[:, ::1] p = np.array(pos0, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] v = np.array(vel0, dtype=np.float64, order="C", copy=True)
    cdef double[::1] m = np.ascontiguousarray(mass, dtype=np.float64)
    cdef double[::1] bd = np.ascontiguousarray(damping, dtype=np.float64)
    cdef double[:, :, ::1] am = np.ascontiguousarray(amp, dtype=np.float64)
    cdef double[:, ::1] om = np.ascontiguousarray(omega, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0]
    cdef double[:, ::1] mom = np.zeros((n, 3))
    cdef double[:, ::1] pt = np.zeros((n, 3))
    cdef double[:, ::1] vt = np.zeros((n, 3))
    cdef double[:, :, ::1] kp = np.zeros((4, n, 3))
    cdef double[:, :, ::1] kv = np.zeros((4, n, 3))
    cdef double[:, :, ::1] out
    cdef bint record = traj is not None
    if record:
        out = traj
    cdef int s, st, i, c, rc = 0
    cdef double t, h, w
    cdef double stage_dt[4]
    stage_dt[0] = 0.0
    stage_dt[1] = 0.5
    stage_dt[2] = 0.5
    stage_dt[3] = 1.0
    with nogil:
        for s in range(nsub):
            t = t0 + s * dt
            for st in range(4):
                h = stage_dt[st] * dt
                for i in range(n):
                    for c in range(3):
                        if st == 0:
                            pt[i, c] = p[i, c]
                            vt[i, c] = v[i, c]
                        else:
                            pt[i, c] = p[i, c] + h * kp[st - 1, i, c]
                            vt[i, c] = v[i, c] + h * kv[st - 1, i, c]
                        kp[st, i, c] = vt[i, c]
                rc = _accel(pt, vt, m, bd, am, om, t + h, min_sep, mom, kv[st])
                if rc != 0:
                    break
            if rc != 0:
                break
            for i in range(n):
                for c in range(3):
                    p[i, c] += dt / 6.0 * (kp[0, i, c] + 2.0 * kp[1, i, c] + 2.0 * kp[2, i, c] + kp[3, i, c])
                    v[i, c] += dt / 6.0 * (kv[0, i, c] + 2.0 * kv[1, i, c] + 2.0 * kv[2, i, c] + kv[3, i, c])
                    if record:
                        out[s, i, c] = p[i, c]
                        out[s, i, 3 + c] = v[i, c]
    return np.asarray(p), np.asarray(v), (s if rc != 0 else nsub)

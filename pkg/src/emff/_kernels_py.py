"""NumPy fallback for :mod:`emff._kernels` with the identical contract."""

from __future__ import annotations

import numpy as np

from .em_model import C0


def _accel(pos, vel, mass, damping, amp, omega, t, min_sep):
    mom = np.einsum("ikc,ik->ic", amp, np.sin(omega * t))
    n = pos.shape[0]
    acc = -damping[:, None] * vel
    iu, ju = np.triu_indices(n, 1)
    if iu.size:
        r = pos[iu] - pos[ju]
        dist = np.sqrt(np.einsum("pc,pc->p", r, r))
        if not np.all(dist >= min_sep):
            return None
        rhat = r / dist[:, None]
        ui, uj = mom[iu], mom[ju]
        a = np.einsum("pc,pc->p", ui, rhat)
        b = np.einsum("pc,pc->p", uj, rhat)
        uu = np.einsum("pc,pc->p", ui, uj)
        f = (C0 / dist**4)[:, None] * (b[:, None] * ui + a[:, None] * uj + (uu - 5.0 * a * b)[:, None] * rhat)
        np.add.at(acc, iu, f)
        np.add.at(acc, ju, -f)
    return acc / mass[:, None]


def integrate_window(pos0, vel0, mass, damping, amp, omega, t0, dt, nsub, min_sep, traj=None):
    p = np.array(pos0, dtype=float)
    v = np.array(vel0, dtype=float)
    mass = np.asarray(mass, dtype=float)
    damping = np.asarray(damping, dtype=float)
    amp = np.asarray(amp, dtype=float)
    omega = np.asarray(omega, dtype=float)
    for s in range(nsub):
        t = t0 + s * dt
        k1v = _accel(p, v, mass, damping, amp, omega, t, min_sep)
        if k1v is None:
            return p, v, s
        k1p = v
        k2p = v + 0.5 * dt * k1v
        k2v = _accel(p + 0.5 * dt * k1p, k2p, mass, damping, amp, omega, t + 0.5 * dt, min_sep)
        if k2v is None:
            return p, v, s
        k3p = v + 0.5 * dt * k2v
        k3v = _accel(p + 0.5 * dt * k2p, k3p, mass, damping, amp, omega, t + 0.5 * dt, min_sep)
        if k3v is None:
            return p, v, s
        k4p = v + dt * k3v
        k4v = _accel(p + dt * k3p, k4p, mass, damping, amp, omega, t + dt, min_sep)
        if k4v is None:
            return p, v, s
        p = p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        v = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if traj is not None:
            traj[s, :, :3] = p
            traj[s, :, 3:] = v
    return p, v, nsub

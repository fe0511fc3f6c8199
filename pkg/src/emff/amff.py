"""Frequency-multiplexed sinusoidal moments and closed-form amplitude allocation.

Every satellite pair ``(i, j)`` shares one interaction frequency ``w_ij``.
Over a control window ``[kT, kT + T)`` satellite ``i`` drives

    u_i(t) = sum_j p_ij,k * sin(w_ij * t)

and because ``T`` holds a whole number of periods of every tone, only the
same-frequency amplitude pair ``(p_ij,k, p_ji,k)`` survives time averaging.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.integrate import simpson

from .em_model import C0, _unit, force_shape

BRANCH_RTOL = 1e-12
ORACLE_NODES = 4096


def pair_key(i: int, j: int) -> tuple[int, int]:
    """Unordered pair key ``(min, max)``."""
    return (i, j) if i < j else (j, i)


@dataclass
class FrequencyPlan:
    """Interaction frequency per unordered pair and the common window ``T``."""

    pair_freq: dict[tuple[int, int], float]
    period: float

    def __post_init__(self):
        self.pair_freq = {pair_key(*k): float(w) for k, w in self.pair_freq.items()}
        if not self.period > 0:
            raise ValueError(f"control period must be > 0, got {self.period}")
        for key, w in self.pair_freq.items():
            if not w > 0:
                raise ValueError(f"frequency for pair {key} must be > 0, got {w}")
            cycles = self.period * w / (2.0 * math.pi)
            if abs(cycles - round(cycles)) > 1e-9 * max(1.0, cycles) or round(cycles) < 1:
                raise ValueError(
                    f"period {self.period} s is not a whole multiple of 2*pi/w for pair {key} "
                    f"({cycles:.6g} cycles)"
                )
        for (a, wa), (b, wb) in combinations(self.pair_freq.items(), 2):
            if abs(wa - wb) <= 1e-12 * max(wa, wb):
                raise ValueError(f"pairs {a} and {b} share frequency {wa}; frequencies must be unique")

    def freq(self, i: int, j: int) -> float:
        return self.pair_freq[pair_key(i, j)]

    def shortest_period(self) -> float:
        return min(2.0 * math.pi / w for w in self.pair_freq.values())


@dataclass
class AmplitudeSet:
    """Moment amplitudes [A m^2] keyed by ordered pair, held over one window."""

    step: int = 0
    amp: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    def get(self, i: int, j: int) -> np.ndarray:
        return self.amp.get((i, j), np.zeros(3))


def moment_waveform(i: int, t: float, plan: FrequencyPlan, amps: AmplitudeSet, k: int) -> np.ndarray:
    """Magnetic moment of satellite ``i`` at time ``t`` inside window ``k``."""
    T = plan.period
    slack = 1e-12 * max(1.0, abs(t))
    if not (k * T - slack <= t < (k + 1) * T + slack):
        raise ValueError(f"t={t} lies outside control window {k} = [{k * T}, {(k + 1) * T})")
    u = np.zeros(3)
    for (a, b), p in amps.amp.items():
        if a == i:
            u += np.asarray(p, dtype=float) * math.sin(plan.freq(a, b) * t)
    return u


def averaged_force_shape(r, p_ij, p_ji) -> np.ndarray:
    """Window average of the force shape for a same-frequency amplitude pair."""
    return 0.5 * force_shape(r, p_ij, p_ji)


def _force_shape_rows(rhat: np.ndarray, ui: np.ndarray, uj: np.ndarray) -> np.ndarray:
    a = ui @ rhat
    b = uj @ rhat
    dot = np.einsum("ij,ij->i", ui, uj)
    return b[:, None] * ui + a[:, None] * uj + (dot - 5.0 * a * b)[:, None] * rhat[None, :]


def numeric_average_oracle(r, waveform_i, waveform_j, k: int, T: float, nodes: int = ORACLE_NODES) -> np.ndarray:
    """Composite-Simpson time average of ``force_shape`` over window ``k`` with frozen ``r``.

    ``waveform_i`` / ``waveform_j`` map a time array of shape ``(n,)`` to moments
    of shape ``(n, 3)``.
    """
    if nodes % 2:
        nodes += 1
    rhat, _ = _unit(r)
    t = np.linspace(k * T, (k + 1) * T, nodes + 1)
    ui = np.broadcast_to(np.asarray(waveform_i(t), dtype=float), (t.size, 3))
    uj = np.broadcast_to(np.asarray(waveform_j(t), dtype=float), (t.size, 3))
    vals = _force_shape_rows(rhat, ui, uj)
    return simpson(vals, x=t, axis=0) / T


def sinusoid(p, omega: float):
    """Waveform ``t -> p sin(omega t)`` in the shape expected by the oracle."""
    p = np.asarray(p, dtype=float)
    return lambda t: np.sin(omega * np.asarray(t))[:, None] * p[None, :]


def approx_avg_force(r, p_ij, p_ji) -> np.ndarray:
    """Window-averaged force [N] on ``i`` with separation frozen at the window start."""
    _, dist = _unit(r)
    return C0 / (2.0 * dist**4) * force_shape(r, p_ij, p_ji)


def _sgn(x: float, scale: float) -> float:
    if abs(x) <= BRANCH_RTOL * scale:
        return 0.0
    return math.copysign(1.0, x)


def allocation_components(r, f_star) -> tuple[float, float, float, float]:
    """Scalar components ``(g_r, g_rf, h_r, h_rf)`` of the amplitude pair."""
    r = np.asarray(r, dtype=float)
    f_star = np.asarray(f_star, dtype=float)
    _, rn = _unit(r)
    fn = float(np.linalg.norm(f_star))
    scale = rn * fn
    rf = float(r @ f_star)
    cross = float(np.linalg.norm(np.cross(r, f_star)))
    s = _sgn(rf, scale)
    if s == 0.0:
        rf = 0.0
    arf = abs(rf)
    phi1 = math.sqrt(cross**2 + scale**2)
    phi2 = (2.0 - s * s) * phi1
    # phi - |r.f| rewritten through |r|^2|f|^2 - (r.f)^2 = |r x f|^2 to avoid cancellation
    phi1_minus = 2.0 * cross**2 / (phi1 + arf) if phi1 + arf > 0 else 0.0
    phi2_minus = phi1_minus if s != 0.0 else phi2
    g_r = -s / 2.0 * math.sqrt((arf + phi1) / rn)
    g_rf = math.sqrt(phi2_minus / rn) / math.sqrt(2.0)
    h_r = 0.5 * math.sqrt((arf + phi2) / rn)
    h_rf = -s / math.sqrt(2.0) * math.sqrt(phi1_minus / rn)
    return g_r, g_rf, h_r, h_rf


def allocate_pair(r, f_star) -> tuple[np.ndarray, np.ndarray]:
    """Amplitude pair ``(g, h)`` with ``force_shape(r, g, h) == f_star``."""
    r = np.asarray(r, dtype=float)
    f_star = np.asarray(f_star, dtype=float)
    rhat, rn = _unit(r)
    g_r, g_rf, h_r, h_rf = allocation_components(r, f_star)
    c = np.cross(r, f_star)
    cn = float(np.linalg.norm(c))
    if cn <= BRANCH_RTOL * rn * float(np.linalg.norm(f_star)):
        return g_r * rhat, h_r * rhat
    e_perp = np.cross(c, r) / (rn * cn)
    return g_r * rhat + g_rf * e_perp, h_r * rhat + h_rf * e_perp


def select_amplitudes(i: int, j: int, r_ij, f_star_ij) -> np.ndarray:
    """Amplitude ``p_ij`` that satellite ``i`` applies for its pair with ``j``.

    Both members evaluate the allocation in the lower-index orientation
    ``(r_ab, f*_ab)`` with ``a < b``, so the two independently computed
    amplitudes combine to ``force_shape(r_ij, p_ij, p_ji) == f*_ij``.
    """
    if i == j:
        raise ValueError("a satellite has no amplitude with itself")
    r_ij = np.asarray(r_ij, dtype=float)
    f_star_ij = np.asarray(f_star_ij, dtype=float)
    if i < j:
        return allocate_pair(r_ij, f_star_ij)[0]
    return allocate_pair(-r_ij, -f_star_ij)[1]

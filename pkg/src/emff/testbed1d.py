"""Current-level controller for the one-dimensional air-track testbed.

Everything here is scalar: positions are signed coordinates along the track
axis and each coil carries a sum of sinusoidal currents, one tone per
neighbor.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .em_model import C0, MIN_SEPARATION, SeparationError

PEAK_GRID = 2000


@dataclass(frozen=True)
class CoilSpec:
    turns: int = 500
    area: float = math.pi * 0.1**2
    max_current: float = 2.35

    def __post_init__(self):
        if self.turns < 1:
            raise ValueError(f"coil turns must be >= 1, got {self.turns}")
        if not self.area > 0:
            raise ValueError(f"coil area must be > 0, got {self.area}")
        if not self.max_current > 0:
            raise ValueError(f"max current must be > 0, got {self.max_current}")

    @property
    def na(self) -> float:
        """Moment per unit current [A m^2 / A]."""
        return self.turns * self.area


@dataclass(frozen=True)
class Band:
    """Error band ``(eps0, eps1)`` inside which the integrator accumulates."""

    eps0: float
    eps1: float

    def __post_init__(self):
        if not self.eps0 > 0:
            raise ValueError(f"eps0 must be > 0, got {self.eps0}")
        if not self.eps1 > self.eps0:
            raise ValueError(f"eps1 must be > eps0, got eps0={self.eps0}, eps1={self.eps1}")

    def __contains__(self, err: float) -> bool:
        return self.eps0 < abs(err) < self.eps1


def _check_sep(r: float) -> None:
    if not abs(r) >= MIN_SEPARATION:
        raise SeparationError(f"separation {r:.3e} m is below {MIN_SEPARATION:g} m")


def _sgn(x: float) -> float:
    return 0.0 if x == 0 else math.copysign(1.0, x)


def integrator_update(xi_prev: float, r: float, d: float, band: Band) -> float:
    """Deadband integrator: accumulate ``r - d`` only while it lies in the band."""
    err = r - d
    return xi_prev + err if err in band else 0.0


def desired_force_1d(r, v, d, xi, alpha, beta, rho, m_sat) -> float:
    """Scalar desired force shape with integral action."""
    _check_sep(r)
    return -(2.0 * m_sat * r**4 / C0) * (alpha * ((r - d) + beta * v) + rho * xi)


def raw_current(r: float, f_star: float, i_minus_j: int, coil: CoilSpec) -> float:
    """Unsaturated current amplitude [A] for one member of a pair.

    The two members must be evaluated with the same ``(r, f_star)``; then
    ``-2 sgn(r) (NA I_lo)(NA I_hi) == f_star``.
    """
    _check_sep(r)
    if i_minus_j == 0:
        raise ValueError("i - j must be nonzero")
    mag = math.sqrt(abs(f_star) / 2.0) / coil.na
    if i_minus_j < 0:
        return -_sgn(f_star) * mag
    return _sgn(r) * mag


def pair_current(i: int, j: int, r_ij: float, f_star_ij: float, coil: CoilSpec) -> float:
    """Current amplitude satellite ``i`` commands for neighbor ``j``.

    The pair is always evaluated in the lower-index orientation, which is what
    the higher-index member needs to realise ``f*_ij`` rather than ``-f*_ij``.
    """
    if i < j:
        return raw_current(r_ij, f_star_ij, i - j, coil)
    return raw_current(-r_ij, -f_star_ij, i - j, coil)


def peak_window_current(amps: Sequence[tuple[float, float]], T: float, grid: int = PEAK_GRID) -> float:
    """Peak of ``|sum a sin(w t)|`` over ``[0, T)`` sampled on a uniform grid.

    ``amps`` holds ``(gamma * I*, w)`` tuples. A single tone is returned exactly.
    """
    amps = [(float(a), float(w)) for a, w in amps if a != 0.0]
    if not amps:
        return 0.0
    if len(amps) == 1:
        return abs(amps[0][0])
    t = np.arange(grid) * (T / grid)
    total = np.zeros(grid)
    for a, w in amps:
        total += a * np.sin(w * t)
    return float(np.max(np.abs(total)))


def saturate_currents(raw: Mapping, peak: float, max_current: float, gamma: Mapping) -> dict:
    """Scale one satellite's weighted amplitudes so its coil never exceeds ``max_current``."""
    scale = 1.0 if peak <= max_current else max_current / peak
    return {key: gamma[key] * scale * value for key, value in raw.items()}


def realized_avg_force_1d(r: float, p_ij: float, p_ji: float) -> float:
    """Window-averaged scalar force [N] on ``i`` from axial moment amplitudes."""
    _check_sep(r)
    return C0 / (2.0 * r**4) * (-2.0 * _sgn(r) * p_ij * p_ji)

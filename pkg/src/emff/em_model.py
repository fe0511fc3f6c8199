"""Far-field magnetic dipole force model and translational n-body dynamics.

Physical vectors are plain ``numpy`` arrays of shape ``(3,)`` resolved in the
inertial frame. All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MU0 = 4.0 * math.pi * 1e-7
"""Vacuum permeability [N/A^2]."""

C0 = 3.0 * MU0 / (4.0 * math.pi)
"""Dipole force constant 3*mu0/(4*pi) = 3e-7 N/A^2."""

MIN_SEPARATION = 1e-6
"""Separations below this [m] are rejected as singular."""


class SeparationError(ValueError):
    """Raised when two dipoles are (numerically) coincident."""


def vec3(x=0.0, y=0.0, z=0.0) -> np.ndarray:
    return np.array([x, y, z], dtype=float)


def _unit(r: np.ndarray) -> tuple[np.ndarray, float]:
    r = np.asarray(r, dtype=float)
    dist = float(np.linalg.norm(r))
    if not dist >= MIN_SEPARATION:
        raise SeparationError(f"separation {dist:.3e} m is below {MIN_SEPARATION:g} m")
    return r / dist, dist


@dataclass
class SatelliteBody:
    """Point-mass satellite with optional linear (viscous) damping."""

    mass: float
    position: np.ndarray = field(default_factory=vec3)
    velocity: np.ndarray = field(default_factory=vec3)
    damping: float = 0.0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        self.velocity = np.asarray(self.velocity, dtype=float).reshape(3)
        if not self.mass > 0:
            raise ValueError(f"mass must be > 0, got {self.mass}")
        if not self.damping >= 0:
            raise ValueError(f"damping must be >= 0, got {self.damping}")


def force_shape(r, ui, uj) -> np.ndarray:
    """Geometry part of the dipole-dipole force on ``i`` due to ``j``.

    ``r`` is the position of ``i`` relative to ``j``. Depends on ``r`` only
    through its direction and is bilinear in ``(ui, uj)``.
    """
    rhat, _ = _unit(r)
    ui = np.asarray(ui, dtype=float)
    uj = np.asarray(uj, dtype=float)
    a = float(ui @ rhat)
    b = float(uj @ rhat)
    return b * ui + a * uj + (float(ui @ uj) - 5.0 * a * b) * rhat


def intersat_force(r, ui, uj) -> np.ndarray:
    """Instantaneous force [N] applied to satellite ``i`` by satellite ``j``."""
    _, dist = _unit(r)
    return C0 / dist**4 * force_shape(r, ui, uj)


def acceleration(i: int, bodies: list[SatelliteBody], moments) -> np.ndarray:
    """Acceleration of body ``i`` from every other dipole plus its own damping.

    Every pair couples physically, whether or not it is a control-graph edge.
    """
    body = bodies[i]
    total = np.zeros(3)
    for j, other in enumerate(bodies):
        if j == i:
            continue
        total += intersat_force(body.position - other.position, moments[i], moments[j])
    return (total - body.damping * body.velocity) / body.mass

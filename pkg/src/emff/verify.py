"""Self-check suites behind ``emff verify``.

Each suite returns a :class:`SuiteResult`; the command passes only if all do.
Library functions are looked up through their modules at call time so that a
patched implementation is exercised (this is how the mutation check works).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from . import amff, em_model, estimator

# reference gains for the two sensor-noise settings of the air-track runs
REFERENCE_GAINS = (
    ((0.1, 1.2e-6, 5e-6), (0.0942, 0.0466)),
    ((0.1, 2.0e-6, 5e-6), (0.1064, 0.0598)),
)
GAIN_TOL = 5e-4


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _timed(fn):
    def wrapper(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def kalman_gains() -> SuiteResult:
    """Steady-state gains for both noise settings against the reference values."""
    lines, ok = [], True
    for (T, V, w), ref in REFERENCE_GAINS:
        gain = estimator.steady_gain(estimator.KalmanConfig(T, V, w))
        err = np.abs(gain - np.array(ref))
        ok &= bool(np.all(err <= GAIN_TOL))
        lines.append(f"V={V:g}: L=[{gain[0]:.5f}, {gain[1]:.5f}] ref=[{ref[0]}, {ref[1]}] "
                     f"max err={err.max():.2e}")
    return SuiteResult("kalman_gains", ok, "; ".join(lines))


def allocation_cases(n: int, rng: np.random.Generator):
    """Random ``(r, f*)`` pairs plus explicit degenerate geometries."""
    for _ in range(n):
        yield rng.uniform(0.1, 2.0, 3) * rng.choice([-1, 1], 3), rng.uniform(-10, 10, 3)
    for _ in range(max(1, n // 100)):
        r = rng.uniform(0.1, 2.0, 3) * rng.choice([-1, 1], 3)
        f = rng.uniform(-10, 10, 3)
        yield r, np.cross(r, f)                    # r . f* = 0
        yield r, rng.uniform(-10, 10) * r           # r x f* = 0
        yield r, np.zeros(3)                        # f* = 0


@_timed
def allocation(n: int = 10_000, seed: int = 1) -> SuiteResult:
    """Closed-form amplitude pair reproduces the requested force shape."""
    rng = np.random.default_rng(seed)
    worst, count = 0.0, 0
    for r, f in allocation_cases(n, rng):
        g, h = amff.allocate_pair(r, f)
        err = np.linalg.norm(em_model.force_shape(r, g, h) - f) / max(1.0, np.linalg.norm(f))
        worst = max(worst, float(err))
        count += 1
    return SuiteResult("allocation", worst <= 1e-9, f"{count} cases, worst scaled error {worst:.2e}")


@_timed
def averaging(n: int = 100, seed: int = 2) -> SuiteResult:
    """Closed-form window averages against quadrature, same and different tones."""
    rng = np.random.default_rng(seed)
    T = 0.1
    base = 2.0 * math.pi / T
    worst_same = worst_cross = 0.0
    for _ in range(n):
        r = rng.uniform(-2.0, 2.0, 3)
        if np.linalg.norm(r) < 0.1:
            r += 0.2
        p, q = rng.uniform(-5, 5, 3), rng.uniform(-5, 5, 3)
        m = int(rng.integers(1, 6))
        k = int(rng.integers(0, 50))
        w = m * base
        ref = amff.averaged_force_shape(r, p, q)
        num = amff.numeric_average_oracle(r, amff.sinusoid(p, w), amff.sinusoid(q, w), k, T)
        worst_same = max(worst_same, float(np.linalg.norm(num - ref) / max(np.linalg.norm(ref), 1e-300)))
        m2 = m + int(rng.integers(1, 5))
        cross = amff.numeric_average_oracle(r, amff.sinusoid(p, w), amff.sinusoid(q, m2 * base), k, T)
        scale = np.linalg.norm(p) * np.linalg.norm(q)
        worst_cross = max(worst_cross, float(np.linalg.norm(cross) / scale))
    ok = worst_same <= 1e-9 and worst_cross <= 1e-9
    return SuiteResult("averaging", ok, f"{n} same-tone cases worst rel err {worst_same:.2e}; "
                                        f"{n} cross-tone cases worst scaled mean {worst_cross:.2e}")


def momentum_scenario(duration: float = 100.0):
    """Three-body closed-loop scenario with friction removed."""
    from .config import load_scenario
    from .em_model import SatelliteBody

    s = load_scenario("exp6_three_repulsion")
    bodies = [SatelliteBody(b.mass, b.position, b.velocity, 0.0) for b in s.bodies]
    return replace(s, bodies=bodies, duration=duration)


def momentum_drift(tel) -> tuple[float, float]:
    mom = np.einsum("i,tij->tj", tel.masses, tel.fine_vel)
    drift = float(np.max(np.linalg.norm(mom - mom[0], axis=1)))
    scale = max(1.0, float(np.sum(np.abs(mom[0]))))
    return drift, scale


@_timed
def momentum(duration: float = 100.0) -> SuiteResult:
    """Total linear momentum of an undamped closed-loop formation stays constant."""
    from .sim import run_scenario

    tel = run_scenario(momentum_scenario(duration))
    drift, scale = momentum_drift(tel)
    return SuiteResult("momentum", drift <= 1e-9 * scale,
                       f"{duration:g} s three-body run, max drift {drift:.2e} kg m/s (limit {1e-9 * scale:.1e})")


SUITES = (kalman_gains, allocation, averaging, momentum)


def run_all(suites=SUITES) -> list[SuiteResult]:
    out = []
    for suite in suites:
        try:
            out.append(suite())
        except Exception as exc:  # a crashing suite is a failing suite
            out.append(SuiteResult(suite.__name__, False, f"raised {type(exc).__name__}: {exc}"))
    return out

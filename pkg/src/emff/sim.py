"""Sampled-data closed-loop simulation of the air-track formation.

The continuous dynamics are integrated with fixed-step RK4 while every
``T`` seconds each satellite measures its neighbors, runs its Kalman filters
and integrators, and commits the current amplitudes it will hold over the
next window. Motion and moments are along the track axis (``x``); the
integrator itself is fully 3D and keeps every physical pair coupled.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .amff import AmplitudeSet, FrequencyPlan
from .em_model import MIN_SEPARATION, SatelliteBody
from .estimator import KalmanConfig, KalmanState, input_estimate, kf_update, steady_gain
from .formation import FormationGraph, LocalView
from .testbed1d import (
    Band,
    CoilSpec,
    desired_force_1d,
    integrator_update,
    pair_current,
    peak_window_current,
    realized_avg_force_1d,
    saturate_currents,
)

log = logging.getLogger(__name__)

MODES = ("open_loop", "closed_loop")


class SimulationAbort(RuntimeError):
    """The run hit the minimum-separation guard."""


@dataclass
class SetpointChange:
    time: float
    desired: dict[tuple[int, int], np.ndarray]


@dataclass
class Scenario:
    name: str
    mass: float
    bodies: list[SatelliteBody]
    graph: FormationGraph
    plan: FrequencyPlan
    coil: CoilSpec
    kalman: KalmanConfig
    duration: float
    dt: float = 5e-4
    control_on: float = 0.0
    seed: int = 0
    mode: str = "closed_loop"
    band: Band | None = None
    open_loop_currents: dict[tuple[int, int], float] = field(default_factory=dict)
    setpoints: list[SetpointChange] = field(default_factory=list)
    noise_var: float | None = None  # sensor noise [m^2]; None uses the filter's V

    def __post_init__(self):
        self.validate()

    @property
    def T(self) -> float:
        return self.plan.period

    @property
    def n(self) -> int:
        return len(self.bodies)

    @property
    def sensor_var(self) -> float:
        return self.kalman.V if self.noise_var is None else self.noise_var

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.T))

    @property
    def substeps(self) -> int:
        return int(round(self.T / self.dt))

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.mass > 0:
            raise ValueError(f"mass must be > 0, got {self.mass}")
        if self.n != self.graph.n:
            raise ValueError(f"{self.n} bodies but graph has n={self.graph.n}")
        if self.noise_var is not None and not self.noise_var >= 0:
            raise ValueError(f"sensor noise variance must be >= 0, got {self.noise_var}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        ratio = self.T / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ValueError(f"dt={self.dt} does not divide the control period T={self.T}")
        if self.dt > self.plan.shortest_period() / 40.0 * (1 + 1e-12):
            raise ValueError(f"dt={self.dt} exceeds 1/40 of the shortest actuation period")
        if not self.duration >= 0:
            raise ValueError(f"duration must be >= 0, got {self.duration}")
        if abs(self.duration / self.T - self.steps) > 1e-9 * max(1.0, self.steps):
            raise ValueError(f"duration={self.duration} is not a whole number of control periods")
        if not self.duration >= self.control_on:
            raise ValueError(f"duration {self.duration} is shorter than control-on time {self.control_on}")
        if abs(self.kalman.T - self.T) > 1e-12:
            raise ValueError(f"Kalman period {self.kalman.T} differs from control period {self.T}")
        for e in self.graph.edges:
            self.plan.freq(*e)  # KeyError if an edge has no frequency
        for i, j in self.open_loop_currents:
            self.plan.freq(i, j)
        if self.mode == "closed_loop" and any(v > 0 for v in self.graph.rho.values()) and self.band is None:
            raise ValueError("integral gain rho > 0 requires an integrator band (eps0, eps1)")


@dataclass
class Telemetry:
    """Per-step log for every ordered edge plus the fine-step truth trajectory."""

    t: np.ndarray
    pairs: list[tuple[int, int]]
    q: dict
    r_hat: dict
    v_hat: dict
    current: dict
    force: dict
    desired: dict
    peak_current: dict
    xi: dict = field(default_factory=dict)
    fine_t: np.ndarray | None = None
    fine_pos: np.ndarray | None = None
    fine_vel: np.ndarray | None = None
    masses: np.ndarray | None = None


@dataclass
class Metrics:
    r_os: float
    T_s: float
    max_F: float
    P_rms: float
    settled: bool = True


def desired_at(s: Scenario, t: float) -> dict[tuple[int, int], np.ndarray]:
    desired = dict(s.graph.desired)
    for change in sorted(s.setpoints, key=lambda c: c.time):
        if t + 1e-9 >= change.time:
            for (i, j), d in change.desired.items():
                d = np.asarray(d, dtype=float)
                desired[(i, j)] = d
                desired[(j, i)] = -d
    return desired


def _pack_amplitudes(n: int, plan: FrequencyPlan, amps: AmplitudeSet):
    tones: list[list[tuple[np.ndarray, float]]] = [[] for _ in range(n)]
    for (i, j), p in sorted(amps.amp.items()):
        tones[i - 1].append((np.asarray(p, dtype=float), plan.freq(i, j)))
    width = max(1, max(len(t) for t in tones))
    amp = np.zeros((n, width, 3))
    omega = np.zeros((n, width))
    for i, row in enumerate(tones):
        for k, (p, w) in enumerate(row):
            amp[i, k] = p
            omega[i, k] = w
    return amp, omega


def integrate_window(pos, vel, masses, damping, plan: FrequencyPlan, amps: AmplitudeSet, k: int, dt: float,
                     traj=None):
    """Integrate every body over window ``[kT, kT + T]`` with the window's sinusoidal moments."""
    n = len(masses)
    nsub = int(round(plan.period / dt))
    amp, omega = _pack_amplitudes(n, plan, amps)
    p, v, done = kernels.integrate_window(
        np.asarray(pos, dtype=float), np.asarray(vel, dtype=float), np.asarray(masses, dtype=float),
        np.asarray(damping, dtype=float), amp, omega, k * plan.period, dt, nsub, MIN_SEPARATION, traj,
    )
    if done != nsub:
        t_hit = k * plan.period + done * dt
        raise SimulationAbort(f"two satellites came within {MIN_SEPARATION:g} m at t={t_hit:.4f} s")
    return p, v


class SatelliteLoop:
    """One satellite's onboard estimator and controller."""

    def __init__(self, i: int, s: Scenario, gain: np.ndarray):
        self.i = i
        self.s = s
        self.neighbors = s.graph.neighbors(i)
        self.gain = gain
        self.kf: dict[int, KalmanState] = {}
        self.xi = {j: 0.0 for j in self.neighbors}
        self.nu = {j: 0.0 for j in self.neighbors}

    def estimate(self, meas: LocalView) -> None:
        for j in self.neighbors:
            q = meas[(self.i, j)]
            if j not in self.kf:
                self.kf[j] = KalmanState.initial(q, self.gain)
            else:
                self.kf[j] = kf_update(self.kf[j], q, self.nu[j], self.s.kalman)

    def command(self, t: float, desired: dict) -> dict[tuple[int, int], float]:
        """Current amplitudes [A] for each neighbor over the coming window."""
        s, i = self.s, self.i
        active = t + 1e-9 >= s.control_on
        if s.mode == "open_loop":
            return {(i, j): (s.open_loop_currents.get((i, j), 0.0) if active else 0.0) for j in self.neighbors}
        raw, gamma, tones = {}, {}, []
        for j in self.neighbors:
            est = self.kf[j]
            d = float(desired[(i, j)][0])
            alpha, beta, rho, g = s.graph.gains(i, j)
            if s.band is not None and active:
                self.xi[j] = integrator_update(self.xi[j], est.r_hat, d, s.band)
            f_star = desired_force_1d(est.r_hat, est.v_hat, d, self.xi[j], alpha, beta, rho, s.mass)
            raw[(i, j)] = pair_current(i, j, est.r_hat, f_star, s.coil) if active else 0.0
            gamma[(i, j)] = g
            tones.append((g * raw[(i, j)], s.plan.freq(i, j)))
        peak = peak_window_current(tones, s.T)
        return saturate_currents(raw, peak, s.coil.max_current, gamma)

    def forces(self, amps: LocalView) -> tuple[dict, dict]:
        """Averaged force estimates and relative-acceleration inputs for the next filter step."""
        i = self.i
        r_hat = {j: self.kf[j].r_hat for j in self.neighbors}
        force_ij = {j: realized_avg_force_1d(r_hat[j], amps[(i, j)], amps[(j, i)]) for j in self.neighbors}

        def force(a: int, b: int) -> float:
            if a == i:
                return force_ij[b]
            if b == i:
                return -force_ij[a]
            # common neighbor: r_ab = r_ib - r_ia
            return realized_avg_force_1d(r_hat[b] - r_hat[a], amps[(a, b)], amps[(b, a)])

        for j in self.neighbors:
            self.nu[j] = input_estimate(i, j, self.s.graph.neighbors, force, self.s.mass)
        return force_ij, dict(self.nu)


def _measure(s: Scenario, pos: np.ndarray, rng: np.random.Generator) -> dict:
    sigma = math.sqrt(s.sensor_var)
    q = {}
    for i, j in s.graph.ordered_pairs():
        q[(i, j)] = float(pos[i - 1, 0] - pos[j - 1, 0]) + sigma * float(rng.standard_normal())
    return q


def control_tick(k: int, s: Scenario, loops: dict[int, SatelliteLoop], pos: np.ndarray, rng):
    """Measure, estimate and command one control step.

    Returns the amplitude set for window ``k`` and the telemetry row.
    """
    t = k * s.T
    q = _measure(s, pos, rng)
    desired = desired_at(s, t)
    currents = {}
    for i, loop in loops.items():
        loop.estimate(LocalView(s.graph, i, q))
        currents.update(loop.command(t, desired))
    na = s.coil.na
    moments = {pair: np.array([na * c, 0.0, 0.0]) for pair, c in currents.items()}
    scalar_p = {pair: na * c for pair, c in currents.items()}
    row = {"q": q, "current": currents, "desired": {p: float(desired[p][0]) for p in q}}
    row["r_hat"] = {(i, j): loops[i].kf[j].r_hat for i, j in q}
    row["v_hat"] = {(i, j): loops[i].kf[j].v_hat for i, j in q}
    row["xi"] = {(i, j): loops[i].xi[j] for i, j in q}
    force = {}
    for i, loop in loops.items():
        f_ij, _ = loop.forces(LocalView(s.graph, i, scalar_p))
        force.update({(i, j): f for j, f in f_ij.items()})
    row["force"] = force
    peak = {}
    for i, loop in loops.items():
        tones = [(currents[(i, j)], s.plan.freq(i, j)) for j in loop.neighbors]
        peak[i] = peak_window_current(tones, s.T) if len(tones) > 1 else max((abs(a) for a, _ in tones), default=0.0)
    row["peak"] = peak
    return AmplitudeSet(step=k, amp=moments), row


def run_scenario(s: Scenario, record_fine: bool = True) -> Telemetry:
    """Run ``s`` from its initial state; deterministic for a given ``s.seed``."""
    rng = np.random.default_rng(s.seed)
    gain = steady_gain(s.kalman)
    loops = {i: SatelliteLoop(i, s, gain) for i in range(1, s.n + 1)}
    pos = np.array([b.position for b in s.bodies])
    vel = np.array([b.velocity for b in s.bodies])
    masses = np.full(s.n, s.mass)
    damping = np.array([b.damping for b in s.bodies])
    K, nsub = s.steps, s.substeps
    pairs = s.graph.ordered_pairs()
    cols = ("q", "r_hat", "v_hat", "current", "force", "desired", "xi")
    data = {c: {p: np.zeros(K + 1) for p in pairs} for c in cols}
    peak = {i: np.zeros(K + 1) for i in loops}

    fine_pos = fine_vel = fine_t = None
    if record_fine:
        fine = np.zeros((K * nsub + 1, s.n, 6))
        fine[0, :, :3] = pos
        fine[0, :, 3:] = vel

    for k in range(K + 1):
        amps, row = control_tick(k, s, loops, pos, rng)
        for c in cols:
            for p in pairs:
                data[c][p][k] = row[c][p]
        for i in loops:
            peak[i][k] = row["peak"][i]
        if k == K:
            break
        traj = fine[1 + k * nsub: 1 + (k + 1) * nsub] if record_fine else None
        pos, vel = integrate_window(pos, vel, masses, damping, s.plan, amps, k, s.dt, traj)

    if record_fine:
        fine_t = np.arange(K * nsub + 1) * s.dt
        fine_pos, fine_vel = fine[:, :, :3], fine[:, :, 3:]
    return Telemetry(
        t=np.arange(K + 1) * s.T, pairs=pairs, peak_current=peak, fine_t=fine_t, fine_pos=fine_pos,
        fine_vel=fine_vel, masses=masses, **data,
    )


def compute_metrics(tel: Telemetry, pair: tuple[int, int], d: float | None = None, t_start: float = 0.0) -> Metrics:
    """Overshoot [cm], 1% settling time [s], peak and RMS averaged force [N] for one ordered pair.

    ``d`` defaults to the last logged setpoint. Only rows at or after
    ``t_start`` are used, and settling time is measured from ``t_start``.
    """
    sel = tel.t >= t_start - 1e-9
    if not np.any(sel):
        raise ValueError("no telemetry rows after t_start")
    t = tel.t[sel] - t_start
    r = np.abs(tel.r_hat[pair][sel])
    target = abs(tel.desired[pair][sel][-1] if d is None else d)
    F = tel.force[pair][sel]

    if target >= r[0]:
        r_os = max(0.0, float(np.max(r - target)))
    else:
        r_os = max(0.0, float(np.max(target - r)))

    outside = np.abs(r - target) > 0.01 * target
    settled = not outside[-1]
    if not settled:
        T_s = math.nan
    elif not np.any(outside):
        T_s = 0.0
    else:
        last_out = int(np.nonzero(outside)[0][-1])
        T_s = float(t[last_out + 1])
    return Metrics(
        r_os=100.0 * r_os, T_s=T_s, max_F=float(np.max(np.abs(F))),
        P_rms=float(math.sqrt(np.mean(F**2))), settled=settled,
    )


@dataclass
class MonteCarloResult:
    runs: list[dict[tuple[int, int], Metrics]]
    mean: dict[tuple[int, int], dict[str, float]]
    std: dict[tuple[int, int], dict[str, float]]


def _one_run(args):
    s, seed, metric_kw = args
    tel = run_scenario(replace(s, seed=seed), record_fine=False)
    return {p: compute_metrics(tel, p, **metric_kw) for p in tel.pairs}


def monte_carlo(s: Scenario, seeds, workers: int = 1, **metric_kw) -> MonteCarloResult:
    """Independent noise realizations; results are merged in seed order."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("at least one seed is required")
    jobs = [(s, seed, metric_kw) for seed in seeds]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as ex:
            runs = list(ex.map(_one_run, jobs))
    else:
        runs = [_one_run(j) for j in jobs]
    mean, std = {}, {}
    for p in runs[0]:
        mean[p], std[p] = {}, {}
        for name in ("r_os", "T_s", "max_F", "P_rms"):
            vals = np.array([getattr(r[p], name) for r in runs])
            mean[p][name] = float(np.mean(vals))
            std[p][name] = float(np.std(vals))
    return MonteCarloResult(runs, mean, std)

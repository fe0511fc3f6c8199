"""Scenario files: versioned YAML documents with line-precise validation."""

from __future__ import annotations

import math
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .amff import FrequencyPlan, pair_key
from .em_model import SatelliteBody
from .estimator import KalmanConfig
from .formation import FormationGraph
from .sim import Scenario, SetpointChange
from .testbed1d import Band, CoilSpec

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<scenario>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


# allowed keys per section; True marks required
SCHEMA = {
    "": {"version": True, "name": True, "description": False, "mode": True, "mass": True, "seed": False,
         "timing": True, "coil": True, "kalman": True, "satellites": True, "graph": True,
         "frequencies": True, "integrator": False, "open_loop": False, "setpoints": False,
         "sensor_noise_var": False},
    "timing": {"period": True, "dt": False, "duration": True, "control_on": False},
    "coil": {"turns": True, "area": True, "max_current": True},
    "kalman": {"V": True, "w": True, "swap_roles": False},
    "satellites[]": {"position": True, "velocity": False, "damping": False},
    "graph": {"beta": True, "edges": True},
    "graph.edges[]": {"pair": True, "alpha": True, "desired": True, "rho": False, "gamma": False},
    "frequencies[]": {"pair": True, "omega": True},
    "integrator": {"eps0": True, "eps1": True},
    "open_loop": {"currents": True},
    "open_loop.currents[]": {"pair": True, "amplitude": True},
    "setpoints[]": {"time": True, "desired": True},
    "setpoints[].desired[]": {"pair": True, "value": True},
}


class _Node:
    """Plain value plus the source line it came from."""

    __slots__ = ("value", "line")

    def __init__(self, value, line):
        self.value = value
        self.line = line


def _wrap(node: yaml.Node):
    line = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = k.value
            if key in out:
                raise ConfigError(f"duplicate key {key!r}", k.start_mark.line + 1)
            out[key] = (_wrap(v), k.start_mark.line + 1)
        return _Node(out, line)
    if isinstance(node, yaml.SequenceNode):
        return _Node([_wrap(v) for v in node.value], line)
    return _Node(_scalar(node), line)


def _scalar(node: yaml.ScalarNode):
    loader = yaml.SafeLoader("")
    try:
        return loader.construct_object(node, deep=True)
    finally:
        loader.dispose()


class _Reader:
    def __init__(self, source: str):
        self.source = source

    def err(self, msg, line):
        return ConfigError(msg, line, self.source)

    def section(self, node: _Node, schema_key: str, path: str) -> dict:
        if not isinstance(node.value, dict):
            raise self.err(f"{path or 'document'} must be a mapping", node.line)
        allowed = SCHEMA[schema_key]
        for key, (_, kline) in node.value.items():
            if key not in allowed:
                raise self.err(f"unknown key {path + '.' if path else ''}{key}", kline)
        for key, required in allowed.items():
            if required and key not in node.value:
                raise self.err(f"missing required key {path + '.' if path else ''}{key}", node.line)
        return {k: v for k, (v, _) in node.value.items()}

    def number(self, node: _Node, name: str) -> float:
        v = node.value
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise self.err(f"{name} must be a number, got {v!r}", node.line)
        if not math.isfinite(v):
            raise self.err(f"{name} must be finite", node.line)
        return float(v)

    def integer(self, node: _Node, name: str) -> int:
        v = node.value
        if isinstance(v, bool) or not isinstance(v, int):
            raise self.err(f"{name} must be an integer, got {v!r}", node.line)
        return v

    def vector(self, node: _Node, name: str) -> np.ndarray:
        if isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return np.array([self.number(node, name), 0.0, 0.0])
        if not isinstance(node.value, list) or len(node.value) != 3:
            raise self.err(f"{name} must be a number or a list of 3 numbers", node.line)
        return np.array([self.number(c, name) for c in node.value])

    def pair(self, node: _Node, name: str) -> tuple[int, int]:
        if not isinstance(node.value, list) or len(node.value) != 2:
            raise self.err(f"{name} must be a list of two satellite ids", node.line)
        i, j = (self.integer(c, name) for c in node.value)
        if i == j:
            raise self.err(f"{name} must join two different satellites", node.line)
        return i, j

    def seq(self, node: _Node, name: str) -> list[_Node]:
        if not isinstance(node.value, list):
            raise self.err(f"{name} must be a list", node.line)
        return node.value

    def build(self, check, line, hints=()):
        """Run a constructor; on failure report the line of the first hint word found in the message."""
        try:
            return check()
        except ConfigError:
            raise
        except (ValueError, KeyError) as exc:
            msg = str(exc.args[0] if exc.args else exc)
            line = next((ln for word, ln in hints if word in msg), line)
            raise self.err(msg, line) from exc


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None, source) from exc
    if root is None:
        raise ConfigError("empty scenario document", 1, source)
    rd = _Reader(source)
    doc = _wrap(root)
    top = rd.section(doc, "", "")

    def key_line(key: str) -> int:
        return doc.value[key][1]

    version = rd.integer(top["version"], "version")
    if version != SCHEMA_VERSION:
        raise rd.err(f"unsupported scenario version {version} (expected {SCHEMA_VERSION})", top["version"].line)
    name = str(top["name"].value)
    mode = top["mode"].value
    mass = rd.number(top["mass"], "mass")
    seed = rd.integer(top["seed"], "seed") if "seed" in top else 0
    noise_var = rd.number(top["sensor_noise_var"], "sensor_noise_var") if "sensor_noise_var" in top else None

    timing = rd.section(top["timing"], "timing", "timing")
    period = rd.number(timing["period"], "timing.period")
    dt = rd.number(timing["dt"], "timing.dt") if "dt" in timing else 5e-4
    duration = rd.number(timing["duration"], "timing.duration")
    control_on = rd.number(timing["control_on"], "timing.control_on") if "control_on" in timing else 0.0

    c = rd.section(top["coil"], "coil", "coil")
    coil = rd.build(lambda: CoilSpec(rd.integer(c["turns"], "coil.turns"), rd.number(c["area"], "coil.area"),
                                     rd.number(c["max_current"], "coil.max_current")), key_line("coil"),
                    [("turns", c["turns"].line), ("area", c["area"].line), ("max current", c["max_current"].line)])

    kal = rd.section(top["kalman"], "kalman", "kalman")
    swap = kal["swap_roles"].value if "swap_roles" in kal else True
    if not isinstance(swap, bool):
        raise rd.err("kalman.swap_roles must be true or false", kal["swap_roles"].line)
    kalman = rd.build(lambda: KalmanConfig(period, rd.number(kal["V"], "kalman.V"),
                                           rd.number(kal["w"], "kalman.w"), swap), key_line("kalman"),
                      [("Kalman V", kal["V"].line), ("Kalman w", kal["w"].line), ("Kalman T", timing["period"].line)])

    bodies = []
    for k, node in enumerate(rd.seq(top["satellites"], "satellites"), start=1):
        sat = rd.section(node, "satellites[]", f"satellites[{k}]")
        pos = rd.vector(sat["position"], "position")
        vel = rd.vector(sat["velocity"], "velocity") if "velocity" in sat else np.zeros(3)
        damp = rd.number(sat["damping"], "damping") if "damping" in sat else 0.0
        bodies.append(rd.build(lambda: SatelliteBody(mass, pos, vel, damp), node.line,
                               [("damping", sat["damping"].line if "damping" in sat else node.line)]))

    g = rd.section(top["graph"], "graph", "graph")
    beta = rd.number(g["beta"], "graph.beta")
    edges, alpha, rho, gamma, desired = set(), {}, {}, {}, {}
    hints = [("beta", g["beta"].line), ("connected", key_line("graph"))]
    for node in rd.seq(g["edges"], "graph.edges"):
        e = rd.section(node, "graph.edges[]", "graph.edges[]")
        i, j = rd.pair(e["pair"], "pair")
        if pair_key(i, j) in edges:
            raise rd.err(f"edge ({i}, {j}) listed twice", node.line)
        edges.add(pair_key(i, j))
        alpha[(i, j)] = rd.number(e["alpha"], "alpha")
        desired[(i, j)] = rd.vector(e["desired"], "desired")
        if "rho" in e:
            rho[(i, j)] = rd.number(e["rho"], "rho")
        if "gamma" in e:
            gamma[(i, j)] = rd.number(e["gamma"], "gamma")
        field_line = {k: e[k].line if k in e else node.line for k in ("alpha", "desired", "rho", "gamma")}
        hints += [(f"edge ({i}, {j})", e["pair"].line), (f"edge ({j}, {i})", e["pair"].line),
                  (f"alpha for edge {pair_key(i, j)}", field_line["alpha"]),
                  (f"rho for pair {pair_key(i, j)}", field_line["rho"]),
                  (f"gamma_{i}{j}", field_line["gamma"]), (f"gamma_{j}{i}", field_line["gamma"]),
                  (f"d_{i}{j}", field_line["desired"]), (f"d_{j}{i}", field_line["desired"])]
    graph = rd.build(lambda: FormationGraph(len(bodies), edges, alpha, beta, desired, rho, gamma), key_line("graph"),
                     hints)

    freqs = {}
    for node in rd.seq(top["frequencies"], "frequencies"):
        f = rd.section(node, "frequencies[]", "frequencies[]")
        key = pair_key(*rd.pair(f["pair"], "pair"))
        if key in freqs:
            raise rd.err(f"frequency for pair {key} listed twice", node.line)
        freqs[key] = rd.number(f["omega"], "omega")
        rd.build(lambda: FrequencyPlan({key: freqs[key]}, period), f["omega"].line,
                 [("control period", timing["period"].line)])
    plan = rd.build(lambda: FrequencyPlan(freqs, period), key_line("frequencies"))

    band = None
    if "integrator" in top:
        b = rd.section(top["integrator"], "integrator", "integrator")
        band = rd.build(lambda: Band(rd.number(b["eps0"], "integrator.eps0"), rd.number(b["eps1"], "integrator.eps1")),
                        key_line("integrator"), [("eps1", b["eps1"].line), ("eps0", b["eps0"].line)])

    currents = {}
    if "open_loop" in top:
        ol = rd.section(top["open_loop"], "open_loop", "open_loop")
        for node in rd.seq(ol["currents"], "open_loop.currents"):
            cur = rd.section(node, "open_loop.currents[]", "open_loop.currents[]")
            currents[rd.pair(cur["pair"], "pair")] = rd.number(cur["amplitude"], "amplitude")

    setpoints = []
    if "setpoints" in top:
        for node in rd.seq(top["setpoints"], "setpoints"):
            sp = rd.section(node, "setpoints[]", "setpoints[]")
            change = {}
            for dn in rd.seq(sp["desired"], "setpoints[].desired"):
                d = rd.section(dn, "setpoints[].desired[]", "setpoints[].desired[]")
                change[rd.pair(d["pair"], "pair")] = rd.vector(d["value"], "value")
            setpoints.append(SetpointChange(rd.number(sp["time"], "setpoints[].time"), change))

    # scenario-level checks span sections; point at the key the message names
    key_lines = [("dt=", timing.get("dt", top["timing"]).line),
                 ("duration", timing["duration"].line),
                 ("control-on", timing.get("control_on", top["timing"]).line),
                 ("Kalman period", timing["period"].line),
                 ("mode", top["mode"].line),
                 ("mass", top["mass"].line),
                 ("sensor noise", top["sensor_noise_var"].line if "sensor_noise_var" in top else doc.line),
                 ("bodies", key_line("satellites")),
                 ("rho", key_line("graph"))]
    try:
        return Scenario(name=name, mass=mass, bodies=bodies, graph=graph, plan=plan, coil=coil, kalman=kalman,
                        duration=duration, dt=dt, control_on=control_on, seed=seed, mode=mode, band=band,
                        open_loop_currents=currents, setpoints=setpoints, noise_var=noise_var)
    except (ValueError, KeyError) as exc:
        msg = str(exc.args[0] if exc.args else exc)
        line = next((ln for word, ln in key_lines if word in msg), key_line("frequencies"))
        raise rd.err(msg, line) from exc


def _vec(v) -> list[float]:
    return [float(x) for x in np.asarray(v, dtype=float)]


def dump_scenario(s: Scenario) -> str:
    g = s.graph
    edges = []
    for a, b in sorted(g.edges):
        edges.append({"pair": [a, b], "alpha": g.alpha[(a, b)], "desired": _vec(g.desired[(a, b)]),
                      "rho": g.rho[(a, b)], "gamma": g.gamma[(a, b)]})
    doc = {
        "version": SCHEMA_VERSION,
        "name": s.name,
        "mode": s.mode,
        "mass": s.mass,
        "seed": s.seed,
        "timing": {"period": s.T, "dt": s.dt, "duration": s.duration, "control_on": s.control_on},
        "coil": {"turns": s.coil.turns, "area": s.coil.area, "max_current": s.coil.max_current},
        "kalman": {"V": s.kalman.V, "w": s.kalman.w, "swap_roles": s.kalman.swap_roles},
        "satellites": [{"position": _vec(b.position), "velocity": _vec(b.velocity), "damping": b.damping}
                       for b in s.bodies],
        "graph": {"beta": g.beta, "edges": edges},
        "frequencies": [{"pair": list(k), "omega": w} for k, w in sorted(s.plan.pair_freq.items())],
    }
    if s.noise_var is not None:
        doc["sensor_noise_var"] = s.noise_var
    if s.band is not None:
        doc["integrator"] = {"eps0": s.band.eps0, "eps1": s.band.eps1}
    if s.open_loop_currents:
        doc["open_loop"] = {"currents": [{"pair": list(p), "amplitude": a}
                                         for p, a in sorted(s.open_loop_currents.items())]}
    if s.setpoints:
        doc["setpoints"] = [{"time": c.time, "desired": [{"pair": list(p), "value": _vec(v)}
                                                         for p, v in sorted(c.desired.items())]}
                            for c in s.setpoints]
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def bundled_names() -> list[str]:
    files = resources.files("emff") / "scenarios"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".yaml"))


def load_scenario(ref: str | Path) -> Scenario:
    """Load a scenario from a file path or a bundled scenario name."""
    path = Path(ref)
    if path.is_file():
        return parse_scenario(path.read_text(), str(path))
    name = str(ref)
    if name in bundled_names():
        res = resources.files("emff") / "scenarios" / f"{name}.yaml"
        return parse_scenario(res.read_text(), f"{name}.yaml")
    raise ConfigError(f"no such scenario file or bundled scenario: {ref}", None, str(ref))

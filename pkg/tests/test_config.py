import math

import numpy as np
import pytest

from emff.config import ConfigError, bundled_names, dump_scenario, load_scenario, parse_scenario
from emff.testbed1d import CoilSpec

EXPECTED = ["exp1_open_loop_attraction", "exp2_open_loop_repulsion", "exp3_repulsion", "exp4_attraction",
            "exp5_multi_setpoint", "exp6_three_repulsion", "exp7_three_attraction", "exp8_three_mixed"]


def text(name):
    from importlib import resources

    return (resources.files("emff") / "scenarios" / f"{name}.yaml").read_text()


def test_all_experiments_bundled():
    assert bundled_names() == EXPECTED


@pytest.mark.parametrize("name", EXPECTED)
def test_round_trip_idempotent(name):
    s = load_scenario(name)
    once = dump_scenario(s)
    twice = dump_scenario(parse_scenario(once))
    assert once == twice


def test_embedded_air_track_values():
    s = load_scenario("exp3_repulsion")
    assert s.T == 0.1 and s.dt == 5e-4 and s.control_on == 5.0
    assert s.plan.freq(1, 2) == pytest.approx(40 * math.pi, rel=1e-15)
    assert (s.kalman.V, s.kalman.w) == (1.2e-6, 5e-6)
    assert s.coil == CoilSpec(500, math.pi * 0.01, 2.35)
    alpha, beta, rho, gamma = s.graph.gains(1, 2)
    assert (alpha, beta, rho, gamma) == (0.0158, 6.89, 0.0, 1.0)
    # gain products that fix the otherwise unstated mass
    ratio = alpha * s.mass / (3e-7 * s.coil.na**2)
    assert ratio == pytest.approx(812, rel=1e-6)
    assert ratio * beta == pytest.approx(5600, rel=2e-3)


def test_three_satellite_values():
    s = load_scenario("exp6_three_repulsion")
    assert s.graph.neighbors(1) == [2, 3] and s.graph.neighbors(2) == [1]
    assert s.plan.freq(1, 2) == pytest.approx(20 * math.pi) and s.plan.freq(1, 3) == pytest.approx(40 * math.pi)
    assert s.graph.gamma[(2, 1)] == pytest.approx(1.25)
    assert (s.band.eps0, s.band.eps1) == (0.015, 0.021)
    assert all(b.damping == 0.08 for b in s.bodies)
    assert s.kalman.V == 2e-6
    ratio = 0.0158 * s.mass / (3e-7 * s.coil.na**2)
    assert ratio * 7.38 == pytest.approx(6000, rel=2e-3)
    assert 0.00136 * s.mass / (3e-7 * s.coil.na**2) == pytest.approx(70, rel=1e-2)
    np.testing.assert_allclose(s.graph.desired[(1, 2)], [0.42, 0, 0])
    np.testing.assert_allclose(s.graph.desired[(1, 3)], [-0.45, 0, 0])


def test_setpoint_schedule():
    s = load_scenario("exp5_multi_setpoint")
    assert len(s.setpoints) == 1 and s.setpoints[0].time == 60.0
    np.testing.assert_allclose(s.setpoints[0].desired[(1, 2)], [-0.5, 0, 0])


def line_of(src, needle):
    return next(i for i, ln in enumerate(src.splitlines(), start=1) if needle in ln)


@pytest.mark.parametrize("old, new, needle, message", [
    ("eps1: 0.021", "eps1: 0.01", "eps1: 0.01", "eps1 must be > eps0"),
    ("  turns: 500", "  turns: 500\n  colour: red", "colour", "unknown key coil.colour"),
    ("dt: 0.0005", "dt: 0.0003", "dt: 0.0003", "does not divide"),
    ("duration: 60.0", "duration: 60.05", "duration: 60.05", "whole number"),
    ("max_current: 2.35", "max_current: -2.35", "max_current: -2.35", "max current must be > 0"),
    ("beta: 7.38", "beta: fast", "beta: fast", "must be a number"),
    ("gamma: 0.8              # gamma_21", "gamma: 0.0              # gamma_21", "gamma: 0.0", "gamma_12 must be > 0"),
    ("omega: 62.83185307179586", "omega: 60.0", "omega: 60.0", "whole multiple"),
    ("rho: 0.00136            # integral", "rho: -0.1            # integral", "rho: -0.1", "must be >= 0"),
    ("V: 2.0e-6", "V: 0.0", "V: 0.0", "Kalman V must be > 0"),
    ("omega: 62.83185307179586", "omega: 125.66370614359172", "frequencies:", "share frequency"),
])
def test_errors_are_line_precise(old, new, needle, message):
    src = text("exp6_three_repulsion")
    assert old in src
    bad = src.replace(old, new, 1)
    with pytest.raises(ConfigError) as info:
        parse_scenario(bad, "bad.yaml")
    assert message in str(info.value)
    assert info.value.line == line_of(bad, needle)
    assert str(info.value).startswith(f"bad.yaml:{info.value.line}:")


def test_missing_key_and_version():
    src = text("exp3_repulsion")
    with pytest.raises(ConfigError, match="missing required key coil.turns"):
        parse_scenario(src.replace("  turns: 500", ""))
    with pytest.raises(ConfigError, match="unsupported scenario version"):
        parse_scenario(src.replace("version: 1", "version: 2"))


def test_malformed_and_empty_documents():
    with pytest.raises(ConfigError, match="malformed"):
        parse_scenario("version: [1\n")
    with pytest.raises(ConfigError, match="empty"):
        parse_scenario("")
    with pytest.raises(ConfigError, match="document must be a mapping"):
        parse_scenario("- 1\n- 2\n")


def test_duplicate_key():
    with pytest.raises(ConfigError, match="duplicate key") as info:
        parse_scenario(text("exp3_repulsion").replace("seed: 0", "seed: 0\nseed: 1"))
    assert info.value.line is not None


def test_unknown_scenario_reference():
    with pytest.raises(ConfigError, match="no such scenario"):
        load_scenario("exp9_nothing")


def test_sensor_noise_override_round_trips():
    src = text("exp3_repulsion") + "sensor_noise_var: 0.0\n"
    s = parse_scenario(src)
    assert s.sensor_var == 0.0
    assert parse_scenario(dump_scenario(s)).noise_var == 0.0

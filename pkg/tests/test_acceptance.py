"""Exit criteria. Each test records one PASS/FAIL line, printed at the end of the session.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary block
"acceptance criteria" lists every criterion with its measured values.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from emff import verify
from emff.cli import main
from emff.config import bundled_names, load_scenario
from emff.sim import compute_metrics, monte_carlo, run_scenario

pytestmark = pytest.mark.acceptance

RESULTS: dict[int, tuple[bool, str]] = {}
SEEDS = range(20)


def record(n: int, checks: list[tuple[str, bool]], extra: str = "") -> None:
    ok = all(c for _, c in checks)
    detail = "; ".join(f"{name} {'ok' if c else 'MISS'}" for name, c in checks)
    RESULTS[n] = (ok, detail + (f" ({extra})" if extra else ""))
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {RESULTS[n][1]}"
    print(line)
    assert ok, line


def inside(x, lo, hi):
    return lo <= x <= hi


def test_criterion_01_kalman_gains():
    t0 = time.perf_counter()
    res = verify.kalman_gains()
    dt = time.perf_counter() - t0
    record(1, [(res.detail, res.passed), (f"runtime {dt:.3f}s < 1s", dt < 1.0)])


def test_criterion_02_allocation():
    t0 = time.perf_counter()
    res = verify.allocation(10_000)
    dt = time.perf_counter() - t0
    record(2, [(res.detail, res.passed), (f"runtime {dt:.2f}s < 5s", dt < 5.0)])


def test_criterion_03_averaging():
    t0 = time.perf_counter()
    res = verify.averaging(100)
    dt = time.perf_counter() - t0
    record(3, [(res.detail, res.passed), (f"runtime {dt:.2f}s < 10s", dt < 10.0)])


def test_criterion_04_momentum():
    res = verify.momentum(100.0)
    record(4, [(res.detail, res.passed)])


def table_checks(name, bands):
    t0 = time.perf_counter()
    mc = monte_carlo(load_scenario(name), SEEDS)
    dt = time.perf_counter() - t0
    checks = []
    for pair in sorted(mc.mean):
        m = mc.mean[pair]
        for key, (lo, hi), fmt in bands:
            checks.append((f"{pair} mean {key}={m[key]:{fmt}} in [{lo:{fmt}}, {hi:{fmt}}]", inside(m[key], lo, hi)))
    return checks, dt


def test_criterion_05_repulsion_batch():
    checks, dt = table_checks("exp3_repulsion", [
        ("T_s", (16.5, 20.1), ".2f"), ("max_F", (2.1e-3, 3.2e-3), ".3e"),
        ("P_rms", (1.0e-4, 1.8e-4), ".3e"), ("r_os", (0.0, 1.2), ".2f")])
    checks.append((f"batch runtime {dt:.1f}s < 60s", dt < 60.0))
    record(5, checks, f"{len(SEEDS)} seeds")


def test_criterion_06_attraction_batch():
    checks, _ = table_checks("exp4_attraction", [
        ("T_s", (16.9, 20.7), ".2f"), ("max_F", (2.6e-3, 4.2e-3), ".3e"), ("P_rms", (1.2e-4, 2.1e-4), ".3e")])
    record(6, checks, f"{len(SEEDS)} seeds")


def test_criterion_07_open_loop_direction():
    checks = []
    for name, start, sign, ref_change in (("exp1_open_loop_attraction", 0.508, -1, 0.128),
                                            ("exp2_open_loop_repulsion", 0.404, +1, 0.156)):
        s = load_scenario(name)
        tel = run_scenario(s)
        sep = np.abs(tel.fine_pos[:, 0, 0] - tel.fine_pos[:, 1, 0])
        act = tel.fine_t >= s.control_on - 1e-12
        steps = np.diff(sep[act])
        monotone = bool(np.all(sign * steps > 0))
        change = sep[act][-1] - sep[act][0]
        same_order = 0.1 <= abs(change) / ref_change <= 10
        checks.append((f"{name} {sep[0]:.3f}->{sep[-1]:.3f} m monotone", monotone and abs(sep[0] - start) < 1e-12))
        checks.append((f"{name} change {change:+.3f} m vs {sign * ref_change:+.3f} m same order", same_order))
    record(7, checks)


def test_criterion_08_three_satellites():
    checks = []
    for name in ("exp6_three_repulsion", "exp7_three_attraction", "exp8_three_mixed"):
        s = load_scenario(name)
        tel = run_scenario(s, record_fine=False)
        eps0 = s.band.eps0
        late = tel.t >= 40.0 - 1e-9
        worst = max(float(np.max(np.abs(tel.r_hat[p] - tel.desired[p])[late])) for p in tel.pairs)
        entered = max(float(tel.t[np.nonzero(np.abs(tel.r_hat[p] - tel.desired[p]) >= eps0)[0][-1] + 1])
                      for p in tel.pairs)
        peak = max(float(v.max()) for v in tel.peak_current.values())
        checks.append((f"{name} all pairs within eps0 from {entered:.1f}s, worst after 40s {worst * 100:.2f}cm",
                       entered <= 40.0 and worst < eps0))
        checks.append((f"{name} peak current {peak:.3f}A <= {s.coil.max_current}A", peak <= s.coil.max_current + 1e-12))
    record(8, checks)


def test_criterion_09_multi_setpoint():
    s = load_scenario("exp5_multi_setpoint")
    switch = s.setpoints[0].time
    checks = []
    for seed in range(5):
        tel = run_scenario(replace(s, seed=seed), record_fine=False)
        for p in tel.pairs:
            m = compute_metrics(tel, p, d=0.5, t_start=switch)
            checks.append((f"seed {seed} {p} re-settled in {m.T_s:.1f}s <= 35s", m.settled and m.T_s <= 35.0))
    record(9, checks)


def test_criterion_10_engineering(tmp_path):
    t0 = time.perf_counter()
    verified = main(["verify"]) == 0
    runs_ok = all(main(["run", name, "--out", str(tmp_path / "a")]) == 0 for name in bundled_names())
    elapsed = time.perf_counter() - t0
    again = main(["run", "exp6_three_repulsion", "--out", str(tmp_path / "b")]) == 0
    name = "exp6_three_repulsion_seed0.csv"
    identical = again and (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    record(10, [("verify exit 0", verified), ("all 8 bundled scenarios exit 0", runs_ok),
                (f"total {elapsed:.1f}s < 300s", elapsed < 300.0), ("same seed gives byte-identical CSV", identical)])

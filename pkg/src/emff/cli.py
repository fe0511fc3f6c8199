"""Command-line entry point: ``emff run | verify | plot | metrics``.

Exit codes: 0 success, 1 verification failure, 2 bad input (scenario or
telemetry), 3 numeric abort during a run.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

from .config import ConfigError, bundled_names, load_scenario
from .em_model import SeparationError
from .estimator import RiccatiDivergence
from .telemetry_io import TelemetryFormatError, read_csv, write_csv

OUT_ENV = "EMFF_OUT_DIR"
EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


def _err(msg: str) -> None:
    print(f"emff: {msg}", file=sys.stderr)


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "emff-out"))


def metric_window(s) -> float:
    """Metrics are taken after the last setpoint change, against the final setpoint."""
    return max((c.time for c in s.setpoints), default=0.0)


def _metrics_dict(m) -> dict:
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in asdict(m).items()}


def _print_metrics(rows: dict) -> None:
    print(f"{'pair':>6} {'r_os[cm]':>9} {'T_s[s]':>8} {'max|F|[N]':>11} {'P[N]':>11}")
    for pair, m in rows.items():
        ts = "unsettled" if m["T_s"] is None else f"{m['T_s']:.2f}"
        print(f"{pair:>6} {m['r_os']:9.3f} {ts:>8} {m['max_F']:11.4e} {m['P_rms']:11.4e}")


def cmd_run(args) -> int:
    from .sim import SimulationAbort, compute_metrics, desired_at, run_scenario

    try:
        s = load_scenario(args.scenario)
        if args.seed is not None:
            s = replace(s, seed=args.seed)
        if args.dt is not None:
            s = replace(s, dt=args.dt)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_INPUT
    except ValueError as exc:
        _err(f"invalid override: {exc}")
        return EXIT_INPUT

    try:
        tel = run_scenario(s, record_fine=False)
    except (SimulationAbort, SeparationError, RiccatiDivergence, FloatingPointError, ArithmeticError) as exc:
        _err(f"numeric abort: {exc}")
        return EXIT_NUMERIC

    out = Path(args.out) if args.out else default_out_dir()
    stem = f"{s.name}_seed{s.seed}"
    csv_path = write_csv(tel, out / f"{stem}.csv")
    t_start = metric_window(s)
    final = desired_at(s, s.duration)
    metrics = {f"{i}-{j}": _metrics_dict(compute_metrics(tel, (i, j), d=abs(final[(i, j)][0]), t_start=t_start))
               for i, j in tel.pairs}
    peak = {str(i): float(v.max()) for i, v in tel.peak_current.items()}
    summary = {"scenario": s.name, "seed": s.seed, "dt": s.dt, "metrics_from_t": t_start,
               "metrics": metrics, "peak_current_A": peak}
    json_path = out / f"{stem}_metrics.json"
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _print_metrics(metrics)
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verify

    results = verify.run_all()
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name:<13} {r.seconds:6.2f}s  {r.detail}")
    ok = all(r.passed for r in results)
    print("all suites passed" if ok else "verification FAILED")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_plot(args) -> int:
    from .plot import render_svg

    try:
        table = read_csv(args.csv)
    except TelemetryFormatError as exc:
        _err(str(exc))
        return EXIT_INPUT
    out = Path(args.out) if args.out else Path(args.csv).with_suffix(".svg")
    render_svg(table, out)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    from .sim import compute_metrics, desired_at

    try:
        table = read_csv(args.csv)
    except TelemetryFormatError as exc:
        _err(str(exc))
        return EXIT_INPUT
    t_start = args.t_start
    if args.scenario:
        try:
            s = load_scenario(args.scenario)
        except ConfigError as exc:
            _err(str(exc))
            return EXIT_INPUT
        final = desired_at(s, s.duration)
        desired = {p: abs(final[p][0]) for p in table.pairs if p in final}
        if t_start is None:
            t_start = metric_window(s)
    elif args.d is not None:
        desired = {p: abs(args.d) for p in table.pairs}
    else:
        _err("metrics needs the reference separation: pass --d or --scenario")
        return EXIT_INPUT
    tel = table.to_telemetry(desired)
    try:
        rows = {f"{i}-{j}": _metrics_dict(compute_metrics(tel, (i, j), d=desired[(i, j)], t_start=t_start or 0.0))
                for i, j in table.pairs}
    except (KeyError, ValueError) as exc:
        _err(f"cannot compute metrics: {exc}")
        return EXIT_INPUT
    if args.json:
        print(json.dumps(rows, indent=2, sort_keys=True))
    else:
        _print_metrics(rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="emff", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write telemetry CSV plus metrics JSON")
    run.add_argument("scenario", help=f"scenario YAML path or bundled name ({', '.join(bundled_names())})")
    run.add_argument("--seed", type=int, help="override the scenario's noise seed")
    run.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./emff-out)")
    run.add_argument("--dt", type=float, help="override the integration step [s]")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="run the built-in property suites")
    ver.set_defaults(func=cmd_verify)

    plot = sub.add_parser("plot", help="render a telemetry CSV as SVG")
    plot.add_argument("csv")
    plot.add_argument("--out", help="SVG path (default: CSV path with .svg suffix)")
    plot.set_defaults(func=cmd_plot)

    met = sub.add_parser("metrics", help="overshoot, settling time and force metrics from a telemetry CSV")
    met.add_argument("csv")
    ref = met.add_mutually_exclusive_group()
    ref.add_argument("--d", type=float, help="reference separation [m] for every pair")
    ref.add_argument("--scenario", help="take the final setpoints and metric window from this scenario")
    met.add_argument("--t-start", type=float, default=None, help="ignore rows before this time [s]")
    met.add_argument("--json", action="store_true", help="print JSON instead of a table")
    met.set_defaults(func=cmd_metrics)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Compare the compiled and NumPy window integrators.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Times one control window (200 RK4 steps) for 2 and 3 satellites on each
backend, checks they agree, and times one full bundled scenario run per
backend.
"""

from __future__ import annotations

import argparse
import math
import os
import subprocess
import sys
import timeit

import numpy as np

from emff import _kernels_py

try:
    from emff import _kernels
except ImportError:
    _kernels = None


def window_case(n: int):
    pos = np.zeros((n, 3))
    pos[:, 0] = np.arange(n) * 0.42
    vel = np.zeros((n, 3))
    mass = np.full(n, 3.8)
    damping = np.full(n, 0.08)
    amp = np.zeros((n, 2, 3))
    omega = np.zeros((n, 2))
    for i in range(n):
        amp[i, 0, 0] = 10.0 * (-1) ** i
        omega[i, 0] = 40 * math.pi
        amp[i, 1, 0] = 5.0
        omega[i, 1] = 20 * math.pi
    return pos, vel, mass, damping, amp, omega, 0.0, 5e-4, 200, 1e-6


def bench_windows(repeat: int) -> None:
    print(f"{'bodies':>6} {'backend':>8} {'ms/window':>10} {'speedup':>8} {'max |diff| [m]':>15}")
    for n in (2, 3):
        args = window_case(n)
        ref = _kernels_py.integrate_window(*args)
        t_py = min(timeit.repeat(lambda: _kernels_py.integrate_window(*args), number=1, repeat=repeat))
        print(f"{n:>6} {'python':>8} {1e3 * t_py:10.3f} {'1.0':>8} {'-':>15}")
        if _kernels is None:
            print(f"{n:>6} {'cython':>8} {'(not built)':>10}")
            continue
        out = _kernels.integrate_window(*args)
        diff = float(np.max(np.abs(out[0] - ref[0])))
        t_cy = min(timeit.repeat(lambda: _kernels.integrate_window(*args), number=1, repeat=repeat))
        print(f"{n:>6} {'cython':>8} {1e3 * t_cy:10.3f} {t_py / t_cy:8.1f} {diff:15.2e}")


def bench_scenario(name: str) -> None:
    # a fresh interpreter per backend, since selection happens at import
    code = ("import time; from emff.config import load_scenario; from emff.sim import run_scenario; "
            "from emff import BACKEND; s = load_scenario(%r); t = time.perf_counter(); "
            "run_scenario(s, record_fine=False); print(BACKEND, time.perf_counter() - t)" % name)
    print(f"\nfull run of {name}:")
    for env_flag in ("0", "1"):
        env = dict(os.environ, EMFF_PURE_PYTHON=env_flag)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, secs = res.stdout.split()
        print(f"  {backend:>7}: {float(secs):7.2f} s")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--scenario", default="exp3_repulsion")
    args = p.parse_args()
    bench_windows(args.repeat)
    bench_scenario(args.scenario)


if __name__ == "__main__":
    main()

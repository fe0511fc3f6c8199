"""Telemetry CSV format.

One row per control step. Columns are ``t_s`` followed by five columns per
ordered pair in sorted pair order, e.g. ``q_1_2_m, r_hat_1_2_m,
v_hat_1_2_mps, I_amp_1_2_A, F_hat_1_2_N``. Values carry 9 significant digits.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sim import Telemetry

FIELDS = (("q", "q_{}_{}_m"), ("r_hat", "r_hat_{}_{}_m"), ("v_hat", "v_hat_{}_{}_mps"),
          ("current", "I_amp_{}_{}_A"), ("force", "F_hat_{}_{}_N"))
_HEADER_RE = re.compile(r"^q_(\d+)_(\d+)_m$")


class TelemetryFormatError(ValueError):
    pass


def _fmt(x: float) -> str:
    return f"{float(x) + 0.0:.9g}"  # + 0.0 folds -0.0 into 0


def header(pairs) -> list[str]:
    cols = ["t_s"]
    for i, j in sorted(pairs):
        cols += [pattern.format(i, j) for _, pattern in FIELDS]
    return cols


def to_csv_text(tel: Telemetry) -> str:
    pairs = sorted(tel.pairs)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header(pairs))
    for k, t in enumerate(tel.t):
        row = [_fmt(t)]
        for p in pairs:
            row += [_fmt(getattr(tel, attr)[p][k]) for attr, _ in FIELDS]
        w.writerow(row)
    return buf.getvalue()


def write_csv(tel: Telemetry, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_csv_text(tel))
    return path


@dataclass
class TelemetryTable:
    t: np.ndarray
    pairs: list[tuple[int, int]]
    columns: dict[str, dict[tuple[int, int], np.ndarray]]

    def to_telemetry(self, desired: dict[tuple[int, int], float] | None = None) -> Telemetry:
        """Rebuild a :class:`Telemetry` (no fine trajectory) for metric evaluation."""
        n = self.t.size
        des = {p: np.full(n, (desired or {}).get(p, np.nan)) for p in self.pairs}
        return Telemetry(t=self.t, pairs=self.pairs, q=self.columns["q"], r_hat=self.columns["r_hat"],
                         v_hat=self.columns["v_hat"], current=self.columns["current"],
                         force=self.columns["force"], desired=des, peak_current={})


def read_csv(path: str | Path) -> TelemetryTable:
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise TelemetryFormatError(f"{path}: cannot read telemetry: {exc}") from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise TelemetryFormatError(f"{path}: empty file")
    head = rows[0]
    if not head or head[0] != "t_s":
        raise TelemetryFormatError(f"{path}: first column must be t_s")
    pairs = []
    for name in head[1:]:
        m = _HEADER_RE.match(name)
        if m:
            pairs.append((int(m.group(1)), int(m.group(2))))
    if not pairs or head != header(pairs):
        raise TelemetryFormatError(f"{path}: header does not match the telemetry column layout")
    body = rows[1:]
    if not body:
        raise TelemetryFormatError(f"{path}: no telemetry rows")
    try:
        data = np.array([[float(x) for x in r] for r in body])
    except ValueError as exc:
        raise TelemetryFormatError(f"{path}: non-numeric value: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != len(head):
        raise TelemetryFormatError(f"{path}: every row needs {len(head)} values")
    t = data[:, 0]
    if np.any(np.diff(t) <= 0):
        raise TelemetryFormatError(f"{path}: time column is not strictly increasing")
    columns = {attr: {} for attr, _ in FIELDS}
    col = 1
    for p in pairs:
        for attr, _ in FIELDS:
            columns[attr][p] = data[:, col]
            col += 1
    return TelemetryTable(t=t, pairs=pairs, columns=columns)

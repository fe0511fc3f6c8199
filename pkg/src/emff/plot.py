"""Deterministic SVG telemetry figure: one column per ordered pair, five rows."""

from __future__ import annotations

import io
import json
from pathlib import Path
from xml.sax.saxutils import escape

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .telemetry_io import TelemetryTable  # noqa: E402

ROWS = (
    ("q", "|q| [m]", np.abs),
    ("r_hat", "|r_hat| [m]", np.abs),
    ("v_hat", "v_hat [m/s]", None),
    ("current", "I [A]", None),
    ("force", "F_hat [N]", None),
)


def render_svg(table: TelemetryTable, out: str | Path) -> Path:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    ncol = len(table.pairs)
    with matplotlib.rc_context({"svg.hashsalt": "emff", "svg.fonttype": "path", "path.simplify": False}):
        fig, axes = plt.subplots(len(ROWS), ncol, figsize=(4.0 * ncol, 9.0), sharex=True, squeeze=False)
        for c, (i, j) in enumerate(table.pairs):
            axes[0, c].set_title(f"satellite {i}, neighbor {j}")
            for r, (key, label, fn) in enumerate(ROWS):
                y = table.columns[key][(i, j)]
                ax = axes[r, c]
                ax.plot(table.t, fn(y) if fn else y, lw=0.9, gid=f"{key}_{i}_{j}")
                ax.grid(True, lw=0.3)
                if c == 0:
                    ax.set_ylabel(label)
            axes[-1, c].set_xlabel("t [s]")
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
    out.write_text(_with_summary(buf.getvalue(), table))
    return out


def trace_summary(table: TelemetryTable) -> dict:
    """Final plotted value of every trace, keyed by trace id."""
    summary = {}
    for i, j in table.pairs:
        for key, _, fn in ROWS:
            y = table.columns[key][(i, j)]
            summary[f"{key}_{i}_{j}"] = float((fn(y) if fn else y)[-1])
    return summary


def _with_summary(svg: str, table: TelemetryTable) -> str:
    # machine-readable final values, placed right after the root element opens
    desc = f'<desc id="trace-final-values">{escape(json.dumps(trace_summary(table), sort_keys=True))}</desc>'
    start = svg.index("<svg")
    end = svg.index(">", start) + 1
    return svg[:end] + "\n " + desc + svg[end:]

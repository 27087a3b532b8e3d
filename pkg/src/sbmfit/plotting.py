"""Figure rendering for sweep reports.

The CSV is the canonical output; these helpers draw the standard trend
figure (mean misclustering proportion versus the swept axis, one line per
method, standard-error bars) next to it for quick inspection.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_METHOD_STYLE = {
    "init": {"color": "0.45", "marker": "s", "linestyle": "--", "label": "spectral init"},
    "mle": {"color": "tab:blue", "marker": "o", "linestyle": "-", "label": "block MLE"},
    "rmle": {"color": "tab:red", "marker": "^", "linestyle": "-", "label": "pooled (regularized) MLE"},
}

_AXIS_LABEL = {
    "k": "number of blocks",
    "alpha": "gamma shape alpha",
    "p": "support probability p",
}


def read_sweep_rows(csv_path) -> list[dict]:
    text = Path(csv_path).read_text()
    body = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def plot_sweep(csv_path, out_path, axis: str | None = None, title: str | None = None) -> Path:
    """Render the trend figure for a sweep CSV; returns the written path."""
    rows = read_sweep_rows(csv_path)
    if not rows:
        raise ValueError(f"{csv_path}: no data rows")
    preset = rows[0]["preset"]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for method in ("init", "mle", "rmle"):
        sub = [r for r in rows if r["method"] == method]
        if not sub:
            continue
        sub.sort(key=lambda r: float(r["axis_value"]))
        x = [float(r["axis_value"]) for r in sub]
        y = [float(r["mean_error"]) for r in sub]
        err = [float(r["stderr_error"]) for r in sub]
        ax.errorbar(x, y, yerr=err, capsize=3, markersize=4, **_METHOD_STYLE[method])
    ax.set_xlabel(_AXIS_LABEL.get(axis or "", "axis value"))
    ax.set_ylabel("mean misclustering proportion")
    ax.set_title(title or f"preset {preset}")
    ax.set_ylim(bottom=0)
    ax.grid(True, alpha=0.3)
    ax.legend(frameon=False)
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out

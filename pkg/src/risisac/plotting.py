"""Figure rendering for sweep results.

Figures are written next to the delimited output: for a sweep, the
per-scheme median range error and median bandwidth split versus the
sweep variable; for a single-point run, per-scheme bar charts.
"""

import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_AXIS_LABELS = {
    "m_ris": "reflecting elements",
    "p_k_dbm": "device transmit power (dBm)",
    "rate_k_th_bps": "device rate threshold (bps)",
    "x_ris": "surface x-coordinate (m)",
}

_SERIES = (
    ("range_err_cm", "median range error (cm)", "range_error"),
    ("alpha_star", "median bandwidth split", "alpha"),
)


def _median(values):
    finite = sorted(v for v in values if not math.isnan(v))
    if not finite:
        return math.nan
    mid = len(finite) // 2
    if len(finite) % 2:
        return finite[mid]
    return 0.5 * (finite[mid - 1] + finite[mid])


def _grouped(records, attr):
    """{scheme: ([sweep values], [medians across seeds])}, sorted by value."""
    cells = defaultdict(list)
    for rec in records:
        cells[(rec.scheme, rec.sweep_value)].append(getattr(rec, attr))
    series = defaultdict(dict)
    for (scheme, value), vals in cells.items():
        series[scheme][value] = _median(vals)
    out = {}
    for scheme, by_value in series.items():
        pairs = sorted(by_value.items(), key=lambda kv: (kv[0] is None, kv[0]))
        out[scheme] = ([p[0] for p in pairs], [p[1] for p in pairs])
    return out

def _plot_attr(records, attr, ylabel, sweep_var, log_y):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    grouped = _grouped(records, attr)
    is_sweep = sweep_var != "none"
    for scheme, (values, medians) in sorted(grouped.items()):
        if is_sweep:
            ax.plot(values, medians, marker="o", label=scheme)
        else:
            ax.bar(scheme, medians[0])
    if log_y and is_sweep:
        ax.set_yscale("log")
    ax.set_xlabel(_AXIS_LABELS.get(sweep_var, "scheme"))
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    if is_sweep:
        ax.legend()
    fig.tight_layout()
    return fig


def render_figures(records, csv_path, sweep_var) -> list:
    """Write one PNG per metric next to the CSV; returns the paths."""
    base = Path(csv_path)
    paths = []
    for attr, ylabel, suffix in _SERIES:
        fig = _plot_attr(records, attr, ylabel, sweep_var,
                         log_y=(attr == "range_err_cm"))
        out = base.with_name(f"{base.stem}_{suffix}.png")
        fig.savefig(out, dpi=150)
        plt.close(fig)
        paths.append(out)
    return paths

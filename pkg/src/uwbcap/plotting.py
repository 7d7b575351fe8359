"""Static renderings of sweep CSVs: matplotlib PNG and a gnuplot script.

Both read the same rows that go to the CSV. Negative (vacuous) lower-bound
values are drawn at zero; the CSV keeps them unclamped.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
FIG_WIDTH = 5.0  # inches

STYLE = {
    "font.family": "serif",
    "font.size": 9,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 3,
    "figure.figsize": (FIG_WIDTH, FIG_WIDTH * GOLDEN),
    "figure.dpi": 150,
    "savefig.dpi": 150,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "uwbcap",
}

AXIS_LABELS = {
    "num_paths_l": "number of paths $L$",
    "duty_cycle_theta": r"duty cycle $\theta$",
    "bandwidth_w_hz": "bandwidth $W$ [Hz]",
}

TITLES = {
    "fig3": "DSSS bounds without duty cycle vs. optimized lower bound",
    "fig4": "Perfect-knowledge rate, uncertainty penalty and throughput",
    "fig5": "Optimized DSSS lower bound vs. PPM upper bound",
    "fig6": "DSSS lower and PPM upper bounds vs. duty cycle",
}


def _plotted_columns(columns):
    # theta_star columns live on a different scale
    return [c for c in columns[1:] if not c.startswith("theta_star")]


def render_png(columns, rows, path, figure_id=None):
    """Write a PNG of every rate column against the swept column.

    Args:
        columns: CSV header; the first entry is the swept parameter.
        rows: ``ResultRow`` objects or plain dicts keyed by column.
        path: PNG destination.
        figure_id: selects a title; optional.
    """
    xcol = columns[0]
    get = [r.values if hasattr(r, "values") else r for r in rows]
    x = [v[xcol] for v in get]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for col in _plotted_columns(columns):
            y = [max(v[col], 0.0) for v in get]
            style = "--" if col == "c_awgn" else "-"
            ax.plot(x, y, style, marker="o" if len(x) <= 40 else None, label=col)
        ax.set_xscale("log")
        ax.set_xlabel(AXIS_LABELS.get(xcol, xcol))
        ax.set_ylabel("rate [bits/sec]")
        if figure_id in TITLES:
            ax.set_title(TITLES[figure_id], fontsize=9)
        ax.legend(loc="best", frameon=False)
        fig.tight_layout()
        # no Software/date chunks, so reruns give identical bytes
        fig.savefig(path, format="png", metadata={"Software": None})
        plt.close(fig)
    return Path(path)


def render_gnuplot(columns, csv_path, script_path, figure_id=None):
    """Write a gnuplot script that plots ``csv_path`` to ``<stem>.svg``."""
    csv_path = Path(csv_path)
    out = csv_path.with_suffix(".svg").name
    xcol = columns[0]
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set logscale x",
        f"set xlabel '{xcol}'",
        "set ylabel 'rate [bits/sec]'",
        "set terminal svg size 800,500",
        f"set output '{out}'",
    ]
    if figure_id in TITLES:
        lines.append(f"set title '{TITLES[figure_id]}'")
    plots = []
    for col in _plotted_columns(columns):
        i = columns.index(col) + 1
        plots.append(f"'{csv_path.name}' using 1:(${i} > 0 ? ${i} : 0) with linespoints title '{col}'")
    lines.append("plot " + ", \\\n     ".join(plots))
    Path(script_path).write_text("\n".join(lines) + "\n")
    return Path(script_path)

"""Render experiment reports to a delimited summary table and figures.

The figure shows the census frequency per distribution against dimension,
with min/max whiskers around the median and the theoretical ball curve
when present; the table carries the same numbers in plot-ready CSV.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .separability import ExperimentReport

__all__ = ["write_table", "render_figure", "render_report"]

_MARKERS = {"ball": "o", "cube": "^", "gaussian": "s", "ellipsoid": "D"}


def write_table(report: ExperimentReport, path) -> Path:
    """Summary CSV: one row per grid cell."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("distribution,n,f1_min,f1_median,f1_max,theory_ball\n")
        for cell in report.cells:
            theory = repr(cell.theory) if cell.theory is not None else ""
            fh.write(
                f"{cell.distribution.kind},{cell.distribution.n},"
                f"{cell.f1_min!r},{cell.f1_median!r},{cell.f1_max!r},{theory}\n"
            )
    return path


def render_figure(report: ExperimentReport, path, dpi: int = 150) -> Path:
    """Separability frequency vs dimension, one series per distribution."""
    path = Path(path)
    series: dict[str, list] = {}
    for cell in report.cells:
        series.setdefault(cell.distribution.kind, []).append(cell)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for kind, cells in series.items():
        cells = sorted(cells, key=lambda c: c.distribution.n)
        ns = [c.distribution.n for c in cells]
        med = [c.f1_median for c in cells]
        err_lo = [c.f1_median - c.f1_min for c in cells]
        err_hi = [c.f1_max - c.f1_median for c in cells]
        ax.errorbar(
            ns,
            med,
            yerr=[err_lo, err_hi],
            marker=_MARKERS.get(kind, "x"),
            capsize=3,
            label=f"{kind} (empirical)",
        )
        theory = [(c.distribution.n, c.theory) for c in cells if c.theory is not None]
        if theory:
            ax.plot(
                [t[0] for t in theory],
                [t[1] for t in theory],
                linestyle="--",
                marker=".",
                label=f"{kind} (bound)",
            )
    ax.set_xlabel("dimension n")
    ax.set_ylabel("separable fraction")
    ax.set_ylim(-0.02, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend()
    ax.set_title(f"Separability census, m={report.config.m}, {report.config.repeats} repeats")
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path


def render_report(report: ExperimentReport, out_dir, dpi: int = 150) -> list[Path]:
    """Write the summary table and the figure into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [
        write_table(report, out / "report_table.csv"),
        render_figure(report, out / "separability_vs_dimension.png", dpi=dpi),
    ]
    return written

"""Report files: JSON, the aligned text table, and matplotlib figures."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evaluation import EvalReport, LevelStats, render_table  # noqa: E402
from .toolchain import OPT_LEVELS  # noqa: E402

_STYLE = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def plot_levels(report: EvalReport, path: Path | str) -> Path:
    """Grouped bars of both metrics for O0-O3 and AVG."""
    cols = list(OPT_LEVELS) + ["AVG"]
    rc = [report.levels.get(lv, LevelStats()).recompilable_pct for lv in OPT_LEVELS] + [report.recompilable_avg]
    rx = [report.levels.get(lv, LevelStats()).reexecutable_pct for lv in OPT_LEVELS] + [report.reexecutable_avg]
    xs = range(len(cols))
    width = 0.38
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.5, 3.2))
        ax.bar([x - width / 2 for x in xs], rc, width, label="Re-Compilability", color="#4c72b0")
        ax.bar([x + width / 2 for x in xs], rx, width, label="Re-Executability", color="#dd8452")
        ax.set_xticks(list(xs))
        ax.set_xticklabels(cols)
        ax.set_ylim(0, 100)
        ax.set_ylabel("%")
        if report.label:
            ax.set_title(report.label, pad=24)
        ax.legend(frameon=False, loc="lower center", bbox_to_anchor=(0.5, 1.0), ncol=2)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def plot_matrix(cells: dict[tuple[str, str], EvalReport], path: Path | str) -> Path:
    """Heatmap of average re-executability, compilers by context levels."""
    compilers = sorted({c for c, _ in cells})
    levels = [lv for lv in OPT_LEVELS if any(lv == l for _, l in cells)]
    grid = [[cells[(c, lv)].reexecutable_avg if (c, lv) in cells else float("nan") for lv in levels]
            for c in compilers]
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(1.2 * len(levels) + 2, 0.6 * len(compilers) + 1.5))
        im = ax.imshow(grid, vmin=0, vmax=100, cmap="viridis", aspect="auto")
        ax.set_xticks(range(len(levels)))
        ax.set_xticklabels([f"ctx {lv}" for lv in levels])
        ax.set_yticks(range(len(compilers)))
        ax.set_yticklabels(compilers)
        for i, row in enumerate(grid):
            for j, v in enumerate(row):
                ax.text(j, i, f"{v:.2f}", ha="center", va="center", color="w" if v < 60 else "k")
        fig.colorbar(im, ax=ax, label="Re-Executability AVG (%)")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def write_report(report: EvalReport, outdir: Path | str, stem: str = "report", figure: bool = True) -> dict[str, Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {"json": outdir / f"{stem}.json", "table": outdir / f"{stem}.txt"}
    paths["json"].write_text(report.to_json())
    paths["table"].write_text(render_table([report]))
    if figure:
        paths["figure"] = plot_levels(report, outdir / f"{stem}.png")
    return paths


def write_summary(reports: Sequence[EvalReport], path: Path | str) -> Path:
    Path(path).write_text(render_table(list(reports)))
    return Path(path)

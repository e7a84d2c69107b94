"""Render sweep CSVs into mean-throughput line charts with error bars.

This is a pure view of the CSV contract: the file is validated against the
exact simulator header, plotted values are taken verbatim, and nothing is
recomputed.  Styling is fixed so identical input yields identical raster
bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

EXPECTED_HEADER = ["sweep_var", "sweep_value", "strategy", "mean_stm", "std_stm",
                   "mean_sse", "mean_see", "n_drops"]

# Strategies always plot in this order; anything else follows alphabetically.
LEGEND_ORDER = ("kb_aware", "maxsinr_wf", "maxsinr_even")

_STYLES = {
    "kb_aware": dict(color="tab:blue", marker="o", linestyle="-"),
    "maxsinr_wf": dict(color="tab:orange", marker="s", linestyle="--"),
    "maxsinr_even": dict(color="tab:green", marker="^", linestyle=":"),
}
_FALLBACK_STYLE = dict(color="tab:gray", marker="d", linestyle="-.")


class FormatError(Exception):
    """The input file does not match the sweep CSV contract."""


@dataclass(frozen=True)
class PlotJob:
    input_csv: Path
    output_image: Path
    x_label: str | None = None   # defaults to the CSV's sweep variable
    title: str = ""


@dataclass
class SweepSeries:
    strategy: str
    x: list[float] = field(default_factory=list)
    mean: list[float] = field(default_factory=list)
    std: list[float] = field(default_factory=list)


def read_sweep_csv(path) -> tuple[str, list[SweepSeries]]:
    """Parse a sweep CSV; strict about the header and row shape."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}")
    if not rows or rows[0] != EXPECTED_HEADER:
        raise FormatError(
            f"header mismatch in {path}: expected {','.join(EXPECTED_HEADER)}")
    if len(rows) == 1:
        raise FormatError(f"{path} has no data rows")

    sweep_vars = set()
    series: dict[str, SweepSeries] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(EXPECTED_HEADER):
            raise FormatError(f"{path}:{lineno}: expected {len(EXPECTED_HEADER)} fields")
        sweep_var, value, strategy, mean_stm, std_stm = row[0], row[1], row[2], row[3], row[4]
        try:
            x = float(value)
            mean = float(mean_stm)
            std = float(std_stm)
            int(row[7])
            float(row[5]), float(row[6])
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-numeric field")
        sweep_vars.add(sweep_var)
        entry = series.setdefault(strategy, SweepSeries(strategy=strategy))
        entry.x.append(x)
        entry.mean.append(mean)
        entry.std.append(std)
    if len(sweep_vars) != 1:
        raise FormatError(f"{path}: mixed sweep variables {sorted(sweep_vars)}")

    ordered = [series[s] for s in LEGEND_ORDER if s in series]
    ordered += [series[s] for s in sorted(series) if s not in LEGEND_ORDER]
    for entry in ordered:
        by_x = sorted(zip(entry.x, entry.mean, entry.std))
        entry.x, entry.mean, entry.std = map(list, zip(*by_x))
    return sweep_vars.pop(), ordered


def build_figure(sweep_var: str, series: list[SweepSeries], x_label=None, title=""):
    """One errorbar line per strategy; values exactly as read."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=150)
    for entry in series:
        style = _STYLES.get(entry.strategy, _FALLBACK_STYLE)
        ax.errorbar(entry.x, entry.mean, yerr=entry.std, label=entry.strategy,
                    capsize=3, **style)
    ax.set_xlabel(x_label or sweep_var)
    ax.set_ylabel("mean STM (msg/s)")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def render_sweep(job: PlotJob) -> Path:
    """Render the job's CSV to its output image; deterministic bytes."""
    sweep_var, series = read_sweep_csv(job.input_csv)
    fig = build_figure(sweep_var, series, x_label=job.x_label, title=job.title)
    out = Path(job.output_image)
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.savefig(out, metadata=_stable_metadata(out.suffix))
    finally:
        plt.close(fig)
    return out


def _stable_metadata(suffix: str):
    # strip writer fields that would make output bytes vary across versions
    if suffix.lower() == ".png":
        return {"Software": None}
    if suffix.lower() == ".svg":
        return {"Date": None}
    return None

"""Reading, validating, and rendering quantile-curve panels.

Input files follow the experiment harness schema: a CSV with header
``iteration,median,q10,q90`` whose quantile columns are ordered
(q10 <= median <= q90) on every row.  A grid figure holds eight panels in
four rows by two columns, one per (spectral scale, slope) cell, with a
solid median curve and dashed 0.1/0.9 quantile curves on a log y-axis.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

EXPECTED_HEADER = ["iteration", "median", "q10", "q90"]
GRID_ROWS = 4
GRID_COLS = 2


class SchemaError(ValueError):
    """A quantiles CSV that does not match the documented schema."""


@dataclass(frozen=True)
class PanelSpec:
    """One panel: its data file, display title, and y-scale choice."""

    quantiles_csv: str | Path
    title: str
    log_scale_y: bool = True


@dataclass(frozen=True)
class QuantileCurves:
    iterations: list[float]
    median: list[float]
    q10: list[float]
    q90: list[float]


def read_quantiles(path) -> QuantileCurves:
    """Parse and validate one quantiles CSV; errors always name the file."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: file does not exist")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if header != EXPECTED_HEADER:
            raise SchemaError(
                f"{path}: header {header!r} does not match {EXPECTED_HEADER!r}"
            )
        iterations, median, q10, q90 = [], [], [], []
        for row_number, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise SchemaError(f"{path}: row {row_number} has {len(row)} fields")
            try:
                it, med, lo, hi = (float(v) for v in row)
            except ValueError:
                raise SchemaError(f"{path}: row {row_number} is not numeric") from None
            if not lo <= med <= hi:
                raise SchemaError(
                    f"{path}: row {row_number} violates q10 <= median <= q90"
                )
            iterations.append(it)
            median.append(med)
            q10.append(lo)
            q90.append(hi)
    if not iterations:
        raise SchemaError(f"{path}: no data rows")
    return QuantileCurves(iterations, median, q10, q90)


def render_grid(panel_specs, output_path) -> Path:
    """Render eight validated panels into one 4x2 figure file.

    All CSVs are read and validated before any drawing starts, so a
    schema violation rejects the whole grid.
    """
    specs = list(panel_specs)
    if len(specs) != GRID_ROWS * GRID_COLS:
        raise ValueError(f"expected {GRID_ROWS * GRID_COLS} panels, got {len(specs)}")
    curves = [read_quantiles(spec.quantiles_csv) for spec in specs]

    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(
        GRID_ROWS, GRID_COLS, figsize=(9.0, 12.0), sharex=False, squeeze=False
    )
    for index, (spec, data) in enumerate(zip(specs, curves)):
        ax = axes[index // GRID_COLS][index % GRID_COLS]
        ax.plot(data.iterations, data.median, "-", color="tab:blue", linewidth=1.6)
        ax.plot(data.iterations, data.q10, "--", color="tab:blue", linewidth=1.0)
        ax.plot(data.iterations, data.q90, "--", color="tab:blue", linewidth=1.0)
        if spec.log_scale_y:
            ax.set_yscale("log")
        ax.set_title(spec.title, fontsize=10)
        ax.set_xlabel("iteration", fontsize=8)
        ax.set_ylabel("relative error", fontsize=8)
        ax.tick_params(labelsize=8)
    fig.tight_layout()
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output_path)
    plt.close(fig)
    return output_path


def panel_title(spectral_alpha: float, rho: float) -> str:
    return f"α = {spectral_alpha:g}, ρ = {rho:g}"

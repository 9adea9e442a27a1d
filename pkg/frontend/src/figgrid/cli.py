"""Command line: render an experiment grid directory into one figure.

The input directory is the output of the experiment harness ``grid``
command: either a ``manifest.json`` listing the cells, or one
subdirectory per cell containing ``config.json`` and ``quantiles.csv``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .panels import GRID_COLS, GRID_ROWS, PanelSpec, SchemaError, panel_title, render_grid

ROW_ORDER = (1.0, 0.5, 0.3, 0.0)
COL_ORDER = (0.2, 0.8)


def collect_panels(input_dir) -> list[PanelSpec]:
    """Build the eight panel specs from a grid directory, row-major in the
    published panel order (slopes down the rows, spectral scales across)."""
    root = Path(input_dir)
    if not root.is_dir():
        raise SchemaError(f"{root}: not a directory")
    cells = []
    manifest = root / "manifest.json"
    if manifest.exists():
        payload = json.loads(manifest.read_text(encoding="utf-8"))
        for cell in payload.get("cells", []):
            cells.append(
                (
                    float(cell["spectral_alpha"]),
                    float(cell["rho"]),
                    root / cell["quantiles_csv"],
                )
            )
    else:
        for config_path in sorted(root.glob("*/config.json")):
            config = json.loads(config_path.read_text(encoding="utf-8"))
            cells.append(
                (
                    float(config["spectral_alpha"]),
                    float(config["rho"]),
                    config_path.parent / "quantiles.csv",
                )
            )
    by_key = {(alpha, rho): path for alpha, rho, path in cells}
    specs = []
    missing = []
    for rho in ROW_ORDER:
        for alpha in COL_ORDER:
            path = by_key.get((alpha, rho))
            if path is None:
                missing.append((alpha, rho))
            else:
                specs.append(PanelSpec(path, panel_title(alpha, rho)))
    if missing:
        raise SchemaError(f"{root}: missing cells {missing}")
    if len(specs) != GRID_ROWS * GRID_COLS:
        raise SchemaError(f"{root}: expected 8 cells, found {len(specs)}")
    return specs


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="figgrid", description="Render an experiment grid into one figure"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    render_p = sub.add_parser("render", help="render a grid directory")
    render_p.add_argument("--in", dest="input_dir", required=True)
    render_p.add_argument("--out", dest="output", required=True)
    render_p.add_argument(
        "--linear-y", action="store_true", help="use a linear instead of log y-axis"
    )
    args = parser.parse_args(argv)
    try:
        specs = collect_panels(args.input_dir)
        if args.linear_y:
            specs = [
                PanelSpec(s.quantiles_csv, s.title, log_scale_y=False) for s in specs
            ]
        path = render_grid(specs, args.output)
    except (SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

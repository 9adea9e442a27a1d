"""Batch renderer for quantile-curve grids from the experiment harness."""

from .panels import PanelSpec, QuantileCurves, SchemaError, panel_title, read_quantiles, render_grid

__version__ = "0.1.0"

"""Figure rendering for extragrad CSV outputs."""

from .render import PlotDataError, PlotSpec, plot_curves, plot_heatmap, render, resolve_glob

__version__ = "0.1.0"

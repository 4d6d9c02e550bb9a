"""Plotting for paydiff reports."""

from .colormaps import PlotColors
from .plot_utils import PlotUtilities

__all__ = ["PlotColors", "PlotUtilities"]

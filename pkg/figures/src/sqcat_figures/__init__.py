"""Plot rendering for emitted simulation runs.

This package draws publication-style figures from the CSV and JSON
files that the simulation CLI writes.  It never computes physics: the
run directories are its only input, read through strict parsers of the
published file contract.
"""

from sqcat_figures.plots import PlotSpec, render

__all__ = ["PlotSpec", "render"]

"""Presentation layer for coloop sweep outputs.

Reads the trajectory and summary CSVs written by the simulator CLI and
renders an SVG figure plus a plain-text table. Everything here is
presentation only: the single derived quantity is the per-timestep mean
over runs that the figure plots, and every number printed as text is
copied verbatim from an input CSV cell.
"""

from .figures import FigureSpec, ReportError, render_trajectories
from .tables import render_summary_table

__version__ = "0.1.0"

__all__ = [
    "FigureSpec",
    "ReportError",
    "render_trajectories",
    "render_summary_table",
    "__version__",
]

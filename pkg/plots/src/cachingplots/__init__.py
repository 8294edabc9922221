"""Line charts from sweep CSV files.

This package consumes the delimited output of the ``codedcache`` command
line and turns one CSV into one figure. It never recomputes loads; the
chart is a pure function of the CSV contents.
"""

from .render import PlotError, PlotSpec, render

__all__ = ["PlotError", "PlotSpec", "render"]

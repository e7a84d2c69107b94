"""Chart rendering for sran-sim sweep output files."""

from .render import FormatError, PlotJob, SweepSeries, build_figure, read_sweep_csv, render_sweep

__version__ = "0.1.0"

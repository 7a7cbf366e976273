"""Figure scripts for gapflow CSV artifacts (rates, diagnostics, blow-up,
Mosco decay).  Strictly downstream of the solver CLI's CSV files."""

__version__ = "0.1.0"

from .common import ColumnError, PlotJob, PlotResult

__all__ = ["ColumnError", "PlotJob", "PlotResult"]

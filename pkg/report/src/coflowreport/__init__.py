"""Figures and percentile tables from coflowsched results CSV files."""

from .figures import PERCENTILES, percentile_gains, plot_bars
from .frame import METRICS, SCHEMA, ResultsFrame, SchemaError

__version__ = "0.1.0"

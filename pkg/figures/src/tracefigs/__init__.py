"""Figure rendering for predsmc trace CSV files."""

from .render import TraceSchemaError, read_trace_columns, render
from .spec import FIGURES, FigureSpec, SeriesSpec

__version__ = "0.1.0"

__all__ = [
    "FIGURES",
    "FigureSpec",
    "SeriesSpec",
    "TraceSchemaError",
    "read_trace_columns",
    "render",
]

"""Figure rendering for simulation run artifacts.

Reads the flat CSV files a run leaves behind (u.csv, v.csv, signals.csv)
and renders state-evolution and controller-comparison figures. The package
deliberately knows nothing about the solvers; the CSV schema is the whole
interface.
"""

from .figures import FIGURE_KINDS, PlotSpec, render
from .schema import (
    SIGNAL_COLUMNS,
    FieldSnapshots,
    SchemaError,
    Signals,
    read_field_snapshots,
    read_signals,
)

__all__ = [
    "FIGURE_KINDS",
    "FieldSnapshots",
    "PlotSpec",
    "SIGNAL_COLUMNS",
    "SchemaError",
    "Signals",
    "read_field_snapshots",
    "read_signals",
    "render",
]

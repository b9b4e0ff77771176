"""Readers for the flat CSV artifacts a simulation run leaves behind.

Two file families are understood, by their documented headers:

    u.csv, v.csv    t,x0,x1,...,x{N}   one field snapshot per row
    signals.csv     t,U,norm_u,norm_v,running_cost

The readers validate headers by column name and row shapes by length, and
raise SchemaError naming the offending file and column, so a caller can
tell a malformed artifact from a missing one.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SIGNAL_COLUMNS = ("t", "U", "norm_u", "norm_v", "running_cost")


class SchemaError(ValueError):
    """A CSV artifact does not match the documented column layout."""


@dataclass(frozen=True)
class FieldSnapshots:
    """Rows of one state component: values[k, i] at time times[k], node i."""

    path: Path
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        for name in ("times", "values"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class Signals:
    """Per-level scalar series of one run."""

    path: Path
    times: np.ndarray = field(repr=False)
    control: np.ndarray = field(repr=False)
    norm_u: np.ndarray = field(repr=False)
    norm_v: np.ndarray = field(repr=False)
    running_cost: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        for name in ("times", "control", "norm_u", "norm_v", "running_cost"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def _read_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    if not path.is_file():
        raise SchemaError(f"{path}: artifact file not found")
    with path.open(newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise SchemaError(f"{path}: file is empty, expected a header row")
    return rows[0], rows[1:]


def _parse_table(path: Path, header: list[str], rows: list[list[str]]) -> np.ndarray:
    table = np.empty((len(rows), len(header)), dtype=float)
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise SchemaError(
                f"{path}: row {r + 1} has {len(row)} fields, expected {len(header)}"
            )
        for c, text in enumerate(row):
            try:
                table[r, c] = float(text)
            except ValueError as exc:
                raise SchemaError(
                    f"{path}: row {r + 1}, column {header[c]!r}: "
                    f"{text!r} is not a number"
                ) from exc
    return table


def read_field_snapshots(run_dir: Path, name: str) -> FieldSnapshots:
    """Read u.csv or v.csv from a run directory.

    Parameters
    ----------
    run_dir : Path
        Run directory holding the artifact.
    name : str
        File name, "u.csv" or "v.csv".

    Returns
    -------
    FieldSnapshots
        Snapshot times and the (n_snapshots, n_nodes) value table.

    Raises
    ------
    SchemaError
        If the file is missing, the header is not t,x0,x1,..., or any row
        is ragged or non-numeric.
    """
    path = Path(run_dir) / name
    header, rows = _read_rows(path)
    if len(header) < 2:
        raise SchemaError(f"{path}: header has no node columns after 't'")
    expected = ["t"] + [f"x{i}" for i in range(len(header) - 1)]
    for got, want in zip(header, expected):
        if got != want:
            raise SchemaError(f"{path}: column {got!r} found where {want!r} was expected")
    table = _parse_table(path, header, rows)
    if table.shape[0] == 0:
        raise SchemaError(f"{path}: no snapshot rows below the header")
    return FieldSnapshots(path=path, times=table[:, 0], values=table[:, 1:])


def read_signals(run_dir: Path) -> Signals:
    """Read signals.csv from a run directory, matching columns by name."""
    path = Path(run_dir) / "signals.csv"
    header, rows = _read_rows(path)
    missing = [name for name in SIGNAL_COLUMNS if name not in header]
    if missing:
        raise SchemaError(f"{path} is missing required column {missing[0]!r}")
    extra = [name for name in header if name not in SIGNAL_COLUMNS]
    if extra:
        raise SchemaError(f"{path} has unexpected column {extra[0]!r}")
    table = _parse_table(path, header, rows)
    if table.shape[0] == 0:
        raise SchemaError(f"{path}: no signal rows below the header")
    col = {name: table[:, header.index(name)] for name in SIGNAL_COLUMNS}
    return Signals(
        path=path,
        times=col["t"],
        control=col["U"],
        norm_u=col["norm_u"],
        norm_v=col["norm_v"],
        running_cost=col["running_cost"],
    )

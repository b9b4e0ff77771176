"""Figure rendering from run artifacts.

Two figure kinds, both built strictly from the documented CSV schema:

    state_evolution    one run: u and v space-time surfaces, the state
                       norms, and the boundary control signal
    comparison         two runs on one time grid: overlaid norm_u curves
                       and overlaid control signals

Rendering never writes into a run directory and the same spec renders the
same figure content every time.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schema import FieldSnapshots, Signals, read_field_snapshots, read_signals

FIGURE_KINDS = ("state_evolution", "comparison")


@dataclass(frozen=True)
class PlotSpec:
    """One figure request: where to read runs, what to draw, where to save."""

    run_dirs: tuple
    kind: str
    out_path: Path
    labels: tuple | None = None
    dpi: int = 150
    title: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"kind must be one of {FIGURE_KINDS}, got {self.kind!r}")
        dirs = tuple(Path(d) for d in self.run_dirs)
        object.__setattr__(self, "run_dirs", dirs)
        needed = 2 if self.kind == "comparison" else 1
        if len(dirs) != needed:
            raise ValueError(
                f"{self.kind} takes exactly {needed} run director"
                f"{'ies' if needed > 1 else 'y'}, got {len(dirs)}"
            )
        if self.labels is not None:
            labels = tuple(str(lbl) for lbl in self.labels)
            if len(labels) != len(dirs):
                raise ValueError(
                    f"got {len(labels)} labels for {len(dirs)} run directories"
                )
            object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "out_path", Path(self.out_path))
        if self.dpi < 1:
            raise ValueError(f"dpi must be positive, got {self.dpi}")

    def label(self, index: int) -> str:
        if self.labels is not None:
            return self.labels[index]
        return self.run_dirs[index].name


def _norm_axis_scale(*series: np.ndarray) -> str:
    values = np.concatenate(series)
    return "log" if values.size and np.all(values > 0) else "linear"


def _surface(ax, snapshots: FieldSnapshots, name: str) -> None:
    values = snapshots.values
    x = np.linspace(0.0, 1.0, values.shape[1])
    mesh = ax.pcolormesh(x, snapshots.times, values, shading="auto")
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    ax.set_title(f"{name}(x, t)")
    ax.figure.colorbar(mesh, ax=ax)


def _render_state_evolution(spec: PlotSpec):
    run = spec.run_dirs[0]
    u = read_field_snapshots(run, "u.csv")
    v = read_field_snapshots(run, "v.csv")
    signals = read_signals(run)

    fig, axes = plt.subplots(2, 2, figsize=(11.0, 7.5), constrained_layout=True)
    _surface(axes[0, 0], u, "u")
    _surface(axes[0, 1], v, "v")

    ax = axes[1, 0]
    ax.plot(signals.times, signals.norm_u, label="|u|")
    ax.plot(signals.times, signals.norm_v, label="|v|", linestyle="--")
    ax.set_yscale(_norm_axis_scale(signals.norm_u, signals.norm_v))
    ax.set_xlabel("t")
    ax.set_ylabel("L2 norm")
    ax.set_title("state norms")
    ax.legend()

    ax = axes[1, 1]
    ax.plot(signals.times, signals.control)
    ax.set_xlabel("t")
    ax.set_ylabel("U(t)")
    ax.set_title("boundary control")

    fig.suptitle(spec.title or spec.label(0))
    return fig


def _render_comparison(spec: PlotSpec):
    first = read_signals(spec.run_dirs[0])
    second = read_signals(spec.run_dirs[1])
    if first.times.shape != second.times.shape:
        raise ValueError(
            "comparison requires aligned time grids: "
            f"{first.times.shape[0]} vs {second.times.shape[0]} levels"
        )
    if not np.array_equal(first.times, second.times):
        level = int(np.argmax(first.times != second.times))
        raise ValueError(
            "comparison requires aligned time grids: level "
            f"{level} has t={first.times[level]!r} vs t={second.times[level]!r}"
        )

    fig, (ax_norm, ax_control) = plt.subplots(
        2, 1, figsize=(9.0, 7.0), sharex=True, constrained_layout=True
    )
    for signals, index, style in ((first, 0, "-"), (second, 1, "--")):
        ax_norm.plot(signals.times, signals.norm_u,
                     style, label=spec.label(index))
        ax_control.plot(signals.times, signals.control,
                        style, label=spec.label(index))
    ax_norm.set_yscale(_norm_axis_scale(first.norm_u, second.norm_u))
    ax_norm.set_ylabel("|u| (L2)")
    ax_norm.set_title("tracking error")
    ax_norm.legend()
    ax_control.set_xlabel("t")
    ax_control.set_ylabel("U(t)")
    ax_control.set_title("boundary control")
    ax_control.legend()
    fig.suptitle(spec.title or f"{spec.label(0)} vs {spec.label(1)}")
    return fig


def render(spec: PlotSpec) -> Path:
    """Render the requested figure and write it to spec.out_path.

    Parameters
    ----------
    spec : PlotSpec
        Validated figure request.

    Returns
    -------
    Path
        The written image path.

    Raises
    ------
    SchemaError
        If an input CSV is missing or malformed; the message names the
        file and column.
    ValueError
        If the comparison time grids are not aligned.
    """
    if spec.kind == "state_evolution":
        fig = _render_state_evolution(spec)
    else:
        fig = _render_comparison(spec)
    try:
        spec.out_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.out_path, dpi=spec.dpi)
    finally:
        plt.close(fig)
    return spec.out_path

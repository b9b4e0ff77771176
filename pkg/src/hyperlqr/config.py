"""Scenario descriptions: named shapes, JSON round-trip, and validation.

A scenario is a plain JSON document (schema_version 1) grouping the plant
parameters, cost weights, grids, initial profiles, controller choice, and
output policy. Functions are specified by name plus numeric parameters
(kind="sine_product", amplitude=10) instead of expressions, so configs stay
diff-able and fixture-friendly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grids import Field, Grid1D, Kernel2D, sample_kernel

CONTROLLERS = (
    "none",
    "lqr",
    "lqr_steady",
    "backstepping_explicit",
    "backstepping_goursat",
    "open_loop_sweep",
)

# 1-D shapes serve both initial profiles and coupling coefficients.
_SHAPE_FIELDS = {
    "zero": (),
    "constant": ("value",),
    "sine": ("amplitude",),
    "bump": ("amplitude", "center", "width"),
    "affine": ("offset", "slope"),
}
_KERNEL_FIELDS = {
    "zero": (),
    "constant": ("value",),
    "sine_product": ("amplitude",),
}


@dataclass(frozen=True)
class ShapeSpec:
    """Named 1-D function of x on [0, 1]; only the kind's own fields matter."""

    kind: str
    amplitude: float = 1.0
    value: float = 0.0
    center: float = 0.5
    width: float = 0.2
    offset: float = 0.0
    slope: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in _SHAPE_FIELDS:
            raise ConfigError(
                f"unknown shape kind {self.kind!r}; expected one of {sorted(_SHAPE_FIELDS)}"
            )
        if self.kind == "bump" and not self.width > 0:
            raise ConfigError(f"bump width must be positive, got {self.width}")

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "constant":
            return np.full_like(x, self.value)
        if self.kind == "sine":
            return self.amplitude * np.sin(np.pi * x)
        if self.kind == "affine":
            return self.offset + self.slope * x
        # smooth bump supported on (center - width/2, center + width/2)
        s = 2.0 * (x - self.center) / self.width
        out = np.zeros_like(x)
        inside = np.abs(s) < 1.0
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
        return out

    def sample(self, grid: Grid1D) -> Field:
        return Field(grid, self.evaluate(np.asarray(grid.nodes)))


@dataclass(frozen=True)
class KernelSpec:
    """Named symmetric-product kernel k(x, y) on the unit square."""

    kind: str
    amplitude: float = 1.0
    value: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in _KERNEL_FIELDS:
            raise ConfigError(
                f"unknown kernel kind {self.kind!r}; expected one of {sorted(_KERNEL_FIELDS)}"
            )

    def sample(self, grid: Grid1D) -> Kernel2D:
        if self.kind == "zero":
            return sample_kernel(lambda x, y: np.zeros_like(x * y), grid)
        if self.kind == "constant":
            return sample_kernel(lambda x, y: np.full_like(x * y, self.value), grid)
        amp = self.amplitude
        return sample_kernel(lambda x, y: amp * np.sin(np.pi * x) * np.sin(np.pi * y), grid)


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one simulation/synthesis run."""

    eps1: float
    eps2: float
    q: float
    c1: ShapeSpec
    c2: ShapeSpec
    R: float
    Q1: KernelSpec
    Q2: KernelSpec
    Pf1: KernelSpec
    Pf2: KernelSpec
    n_cells: int
    t_final: float
    u0: ShapeSpec
    v0: ShapeSpec
    cfl: float | None = 0.9
    n_steps: int | None = None
    controller: str = "none"
    output_dir: str | None = None
    snapshot_stride: int = 1

    def __post_init__(self) -> None:
        if not (self.eps1 > 0 and self.eps2 > 0):
            raise ConfigError(f"transport speeds must be positive, got {self.eps1}, {self.eps2}")
        if self.q == 0:
            raise ConfigError("reflection coefficient q must be nonzero")
        if not self.R > 0:
            raise ConfigError(f"control penalty R must be positive, got {self.R}")
        if self.n_cells < 1:
            raise ConfigError(f"n_cells must be >= 1, got {self.n_cells}")
        if not self.t_final > 0:
            raise ConfigError(f"t_final must be positive, got {self.t_final}")
        if self.n_steps is None:
            if self.cfl is None:
                raise ConfigError("time section needs either cfl or n_steps")
            if not 0 < self.cfl <= 1:
                raise ConfigError(f"cfl must lie in (0, 1], got {self.cfl}")
        else:
            if self.n_steps < 1:
                raise ConfigError(f"n_steps must be >= 1, got {self.n_steps}")
            # a pinned step count owns the time grid; drop cfl so that
            # config -> dict -> config round-trips to an equal structure
            object.__setattr__(self, "cfl", None)
        if self.controller not in CONTROLLERS:
            raise ConfigError(
                f"unknown controller {self.controller!r}; expected one of {CONTROLLERS}"
            )
        if self.snapshot_stride < 1:
            raise ConfigError(f"snapshot_stride must be >= 1, got {self.snapshot_stride}")

    @property
    def grid(self) -> Grid1D:
        return Grid1D(self.n_cells)


def _spec_to_dict(spec) -> dict:
    fields = _SHAPE_FIELDS if isinstance(spec, ShapeSpec) else _KERNEL_FIELDS
    out = {"kind": spec.kind}
    for name in fields[spec.kind]:
        out[name] = getattr(spec, name)
    return out


def _spec_from_dict(raw, cls, where: str):
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ConfigError(f"{where} must be an object with a 'kind' field, got {raw!r}")
    allowed = _SHAPE_FIELDS if cls is ShapeSpec else _KERNEL_FIELDS
    kind = raw["kind"]
    if kind not in allowed:
        raise ConfigError(f"{where}: unknown kind {kind!r}; expected one of {sorted(allowed)}")
    extra = set(raw) - {"kind"} - set(allowed[kind])
    if extra:
        raise ConfigError(f"{where}: unexpected fields {sorted(extra)} for kind {kind!r}")
    return cls(**raw)


def config_to_dict(config: ScenarioConfig) -> dict:
    time: dict = {"t_final": config.t_final}
    if config.n_steps is not None:
        time["n_steps"] = config.n_steps
    else:
        time["cfl"] = config.cfl
    return {
        "schema_version": 1,
        "params": {
            "eps1": config.eps1,
            "eps2": config.eps2,
            "q": config.q,
            "c1": _spec_to_dict(config.c1),
            "c2": _spec_to_dict(config.c2),
        },
        "weights": {
            "R": config.R,
            "Q1": _spec_to_dict(config.Q1),
            "Q2": _spec_to_dict(config.Q2),
            "Pf1": _spec_to_dict(config.Pf1),
            "Pf2": _spec_to_dict(config.Pf2),
        },
        "grid": {"n_cells": config.n_cells},
        "time": time,
        "initial": {"u0": _spec_to_dict(config.u0), "v0": _spec_to_dict(config.v0)},
        "controller": config.controller,
        "output": {
            "directory": config.output_dir,
            "snapshot_stride": config.snapshot_stride,
        },
    }


def _require_section(doc: dict, name: str, keys: set[str]) -> dict:
    if name not in doc or not isinstance(doc[name], dict):
        raise ConfigError(f"config is missing the {name!r} section")
    section = doc[name]
    extra = set(section) - keys
    if extra:
        raise ConfigError(f"{name} section has unexpected fields {sorted(extra)}")
    return section


def config_from_dict(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"config document must be an object, got {type(doc).__name__}")
    version = doc.get("schema_version")
    if version != 1:
        raise ConfigError(f"unsupported schema_version {version!r}; this build reads version 1")
    top_extra = set(doc) - {
        "schema_version", "params", "weights", "grid", "time", "initial", "controller", "output",
    }
    if top_extra:
        raise ConfigError(f"config has unexpected top-level fields {sorted(top_extra)}")

    params = _require_section(doc, "params", {"eps1", "eps2", "q", "c1", "c2"})
    weights = _require_section(doc, "weights", {"R", "Q1", "Q2", "Pf1", "Pf2"})
    grid = _require_section(doc, "grid", {"n_cells"})
    time = _require_section(doc, "time", {"t_final", "cfl", "n_steps"})
    initial = _require_section(doc, "initial", {"u0", "v0"})
    output = doc.get("output", {})
    if not isinstance(output, dict) or set(output) - {"directory", "snapshot_stride"}:
        raise ConfigError("output section may only contain directory and snapshot_stride")

    missing = [
        f"{sec}.{key}"
        for sec, d, keys in (
            ("params", params, ("eps1", "eps2", "q", "c1", "c2")),
            ("weights", weights, ("R", "Q1", "Q2", "Pf1", "Pf2")),
            ("grid", grid, ("n_cells",)),
            ("time", time, ("t_final",)),
            ("initial", initial, ("u0", "v0")),
        )
        for key in keys
        if key not in d
    ]
    if missing:
        raise ConfigError(f"config is missing required fields: {missing}")

    return ScenarioConfig(
        eps1=float(params["eps1"]),
        eps2=float(params["eps2"]),
        q=float(params["q"]),
        c1=_spec_from_dict(params["c1"], ShapeSpec, "params.c1"),
        c2=_spec_from_dict(params["c2"], ShapeSpec, "params.c2"),
        R=float(weights["R"]),
        Q1=_spec_from_dict(weights["Q1"], KernelSpec, "weights.Q1"),
        Q2=_spec_from_dict(weights["Q2"], KernelSpec, "weights.Q2"),
        Pf1=_spec_from_dict(weights["Pf1"], KernelSpec, "weights.Pf1"),
        Pf2=_spec_from_dict(weights["Pf2"], KernelSpec, "weights.Pf2"),
        n_cells=int(grid["n_cells"]),
        t_final=float(time["t_final"]),
        cfl=None if "cfl" not in time else float(time["cfl"]),
        n_steps=None if "n_steps" not in time else int(time["n_steps"]),
        u0=_spec_from_dict(initial["u0"], ShapeSpec, "initial.u0"),
        v0=_spec_from_dict(initial["v0"], ShapeSpec, "initial.v0"),
        controller=doc.get("controller", "none"),
        output_dir=output.get("directory"),
        snapshot_stride=int(output.get("snapshot_stride", 1)),
    )


def load_config(path) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def save_config(config: ScenarioConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2, sort_keys=True) + "\n")


def with_overrides(config: ScenarioConfig, **overrides) -> ScenarioConfig:
    """Apply command-line style overrides, dropping entries that are None."""
    kept = {k: v for k, v in overrides.items() if v is not None}
    if "n_cells" in kept or "t_final" in kept or "cfl" in kept:
        # an explicit cfl or a resized run invalidates a pinned step count
        if "cfl" in kept and config.n_steps is not None:
            kept.setdefault("n_steps", None)
    return replace(config, **kept)


def case1_config() -> ScenarioConfig:
    """The canonical finite-horizon LQR benchmark scenario."""
    sine = ShapeSpec(kind="sine", amplitude=1.0)
    return ScenarioConfig(
        eps1=1.0,
        eps2=1.0,
        q=1.0,
        c1=ShapeSpec(kind="constant", value=10.0),
        c2=ShapeSpec(kind="constant", value=20.0),
        R=1.0,
        Q1=KernelSpec(kind="sine_product", amplitude=10.0),
        Q2=KernelSpec(kind="sine_product", amplitude=20.0),
        Pf1=KernelSpec(kind="sine_product", amplitude=1.0),
        Pf2=KernelSpec(kind="sine_product", amplitude=5.0),
        n_cells=100,
        t_final=1.0,
        cfl=0.9,
        u0=sine,
        v0=sine,
        controller="lqr",
    )

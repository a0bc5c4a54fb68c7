"""Scenario geometry, ground truth and processing parameters.

A scenario document is YAML with the sections ``grid``, ``sensors``,
``transmitter`` (multistatic only), ``targets``, ``params`` and ``echo``.
Lengths are meters, times seconds, and cell/scan indices are 1-based.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

SPEED_OF_LIGHT = 299_792_458.0


class ScenarioError(ValueError):
    """Raised for malformed or invalid scenario documents."""


@dataclass(frozen=True)
class SurveillanceGrid:
    n_x: int
    n_y: int
    delta_x: float = 0.1
    delta_y: float = 0.1

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ScenarioError(f"grid: n_x and n_y must be >= 1, got {self.n_x}x{self.n_y}")
        if not (self.delta_x > 0 and self.delta_y > 0):
            raise ScenarioError("grid: delta_x and delta_y must be > 0")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_x, self.n_y)

    @property
    def extent(self) -> tuple[float, float]:
        return (self.n_x * self.delta_x, self.n_y * self.delta_y)

    def contains(self, x: float, y: float) -> bool:
        w, h = self.extent
        return 0.0 <= x <= w and 0.0 <= y <= h

    def centers(self):
        """Cell-center coordinate vectors (0-based array order)."""
        import numpy as np

        xc = (np.arange(self.n_x) + 0.5) * self.delta_x
        yc = (np.arange(self.n_y) + 0.5) * self.delta_y
        return xc, yc


def cell_center(grid: SurveillanceGrid, i_x: int, i_y: int) -> tuple[float, float]:
    """Center of the 1-based cell ``(i_x, i_y)``."""
    if not (1 <= i_x <= grid.n_x and 1 <= i_y <= grid.n_y):
        raise IndexError(f"cell ({i_x}, {i_y}) outside {grid.n_x}x{grid.n_y} grid")
    return ((i_x - 0.5) * grid.delta_x, (i_y - 0.5) * grid.delta_y)


def cell_of(grid: SurveillanceGrid, x: float, y: float) -> tuple[int, int]:
    """1-based index of the cell containing ``(x, y)``.

    Points on a shared edge go to the upper cell, except on the outer
    boundary of the area where they stay in the last cell.
    """
    if not grid.contains(x, y):
        raise IndexError(f"point ({x}, {y}) outside the surveillance area")
    i_x = min(int(math.floor(x / grid.delta_x)) + 1, grid.n_x)
    i_y = min(int(math.floor(y / grid.delta_y)) + 1, grid.n_y)
    return i_x, i_y


@dataclass(frozen=True)
class SensorLayout:
    mode: str
    sensors: tuple[tuple[float, float], ...]
    transmitter: tuple[float, float] | None = None

    def __post_init__(self):
        if self.mode not in ("monostatic", "multistatic"):
            raise ScenarioError(f"sensors: unknown mode {self.mode!r}")
        if len(self.sensors) < 3:
            raise ScenarioError(f"sensors: N_R >= 3 required, got {len(self.sensors)}")
        if self.mode == "multistatic" and self.transmitter is None:
            raise ScenarioError("sensors: multistatic mode requires a transmitter")

    @property
    def n_r(self) -> int:
        return len(self.sensors)

    @property
    def baseline_lengths(self) -> tuple[float, ...]:
        if self.transmitter is None:
            return tuple(0.0 for _ in self.sensors)
        tx, ty = self.transmitter
        return tuple(math.hypot(x - tx, y - ty) for x, y in self.sensors)


@dataclass(frozen=True)
class Target:
    waypoints: tuple[tuple[int, float, float], ...]

    def __post_init__(self):
        if not self.waypoints:
            raise ScenarioError("targets: a target needs at least one waypoint")
        scans = [w[0] for w in self.waypoints]
        if any(b <= a for a, b in zip(scans, scans[1:])):
            raise ScenarioError("targets: waypoint scans must be strictly increasing")

    @property
    def first_scan(self) -> int:
        return self.waypoints[0][0]

    @property
    def last_scan(self) -> int:
        return self.waypoints[-1][0]

    def position(self, scan: float) -> tuple[float, float] | None:
        if scan < self.first_scan or scan > self.last_scan:
            return None
        for (s0, x0, y0), (s1, x1, y1) in zip(self.waypoints, self.waypoints[1:]):
            if s0 <= scan <= s1:
                f = (scan - s0) / (s1 - s0)
                return (x0 + f * (x1 - x0), y0 + f * (y1 - y0))
        _, x, y = self.waypoints[-1]
        return (x, y)


@dataclass(frozen=True)
class GroundTruth:
    targets: tuple[Target, ...]
    scan_count: int
    scan_period: float = 0.45

    def __post_init__(self):
        if self.scan_count < 1:
            raise ScenarioError("targets: scan_count must be >= 1")
        for i, t in enumerate(self.targets):
            if t.first_scan < 1 or t.last_scan > self.scan_count:
                raise ScenarioError(f"targets[{i}]: waypoint scans must lie in [1, {self.scan_count}]")


def active_targets(truth: GroundTruth, scan: int) -> dict[int, tuple[float, float]]:
    """Positions of the targets present at ``scan``, keyed by target index."""
    if not 1 <= scan <= truth.scan_count:
        raise IndexError(f"scan {scan} outside [1, {truth.scan_count}]")
    out = {}
    for i, t in enumerate(truth.targets):
        pos = t.position(scan)
        if pos is not None:
            out[i] = pos
    return out


def ground_truth_at(truth: GroundTruth, scan: int) -> list[tuple[float, float]]:
    return list(active_targets(truth, scan).values())


@dataclass(frozen=True)
class PipelineParams:
    alpha: float = 0.75
    beta: float = 2.0
    kappa: int = 10
    window_w: int = 4
    stride_s: int = 2
    seed_spacing: tuple[int, int, int] = (5, 5, 1)
    gamma_num: int = 150
    # "eta" ties the region score threshold to the adaptive map threshold
    gamma_score: str | float = "eta"
    smooth_w: int = 3
    segment_n: int = 10
    nu: float = 3.0
    n_c: int = 1500
    n_s: int = 4096
    sample_period: float = 61e-12
    ospa_cutoff: float = 0.7
    ospa_order: float = 1.0
    max_tracklets_per_window: int = 5
    tracklet_relative_threshold: float = 0.01
    measurement_score_floor: float = 0.0
    fit_error_floor: float = 1e-3
    clutter_suppression: bool = False
    clutter_history_v: int = 10
    clutter_floor: float = 1e-6
    gating_distance: float = 0.7
    association_radius: float = 0.15
    bridge_gate: float = 0.6
    new_track_separation: float = 0.0
    confirm_windows: int = 2
    max_points_per_scan: int = 25

    def __post_init__(self):
        checks = [
            (0 < self.alpha < 1, "alpha must lie in (0, 1)"),
            (self.beta > 0, "beta must be > 0"),
            (1 <= self.stride_s <= self.window_w, "stride_s must satisfy 1 <= s <= W"),
            (self.window_w >= 3, "window_w must be >= 3 (leave-one-out line fits)"),
            (self.nu > 0, "nu must be > 0"),
            (self.segment_n >= 2, "segment_n must be >= 2"),
            (self.kappa >= 1 and self.gamma_num >= 0 and self.smooth_w >= 0, "counts must be >= 1"),
            (self.n_c >= 1 and self.n_s >= 1, "n_c and n_s must be >= 1"),
            (len(self.seed_spacing) == 3 and min(self.seed_spacing) >= 1, "seed_spacing must be three integers >= 1"),
            (self.sample_period > 0, "sample_period must be > 0"),
            (self.ospa_cutoff > 0 and self.ospa_order >= 1, "ospa_cutoff > 0 and ospa_order >= 1 required"),
            (self.max_tracklets_per_window >= 1, "max_tracklets_per_window must be >= 1"),
            (self.fit_error_floor > 0 and self.clutter_floor > 0, "floors must be > 0"),
            (self.clutter_history_v >= 1, "clutter_history_v must be >= 1"),
            (self.gating_distance > 0, "gating_distance must be > 0"),
            (self.confirm_windows >= 1, "confirm_windows must be >= 1"),
            (self.gamma_score == "eta" or isinstance(self.gamma_score, (int, float)), "gamma_score must be 'eta' or a number"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ScenarioError(f"params: {msg}")


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    grid: SurveillanceGrid
    layout: SensorLayout
    truth: GroundTruth
    params: PipelineParams = field(default_factory=PipelineParams)
    # EchoModel from uwbtbd.synth; kept untyped here to avoid an import cycle
    echo: Any = None

    def __post_init__(self):
        for i, t in enumerate(self.truth.targets):
            for s, x, y in t.waypoints:
                if not self.grid.contains(x, y):
                    raise ScenarioError(f"targets[{i}]: waypoint ({x}, {y}) at scan {s} is outside the grid")


def _section(doc: dict, key: str, required: bool = True) -> dict:
    val = doc.get(key)
    if val is None:
        if required:
            raise ScenarioError(f"missing section {key!r}")
        return {}
    if not isinstance(val, dict):
        raise ScenarioError(f"section {key!r} must be a mapping")
    return val


def _point(val, where: str) -> tuple[float, float]:
    try:
        x, y = val
        return (float(x), float(y))
    except (TypeError, ValueError):
        raise ScenarioError(f"{where}: expected [x, y], got {val!r}") from None


def _build_params(raw: dict) -> PipelineParams:
    known = {f.name for f in dataclasses.fields(PipelineParams)}
    unknown = set(raw) - known
    if unknown:
        raise ScenarioError(f"params: unknown field(s) {sorted(unknown)}")
    defaults = PipelineParams()
    kw = {}
    try:
        for key, val in raw.items():
            default = getattr(defaults, key)
            if key == "seed_spacing":
                kw[key] = tuple(int(v) for v in val)
            elif key == "gamma_score":
                kw[key] = val if val == "eta" else float(val)
            elif isinstance(default, bool):
                kw[key] = bool(val)
            elif isinstance(default, int):
                kw[key] = int(val)
            elif isinstance(default, float):
                kw[key] = float(val)
            else:
                kw[key] = val
    except (TypeError, ValueError) as e:
        raise ScenarioError(f"params: bad value for {key!r}: {e}") from None
    return PipelineParams(**kw)


def scenario_from_dict(doc: dict, name: str = "scenario") -> ScenarioSpec:
    from .synth import EchoModel

    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    g = _section(doc, "grid")
    try:
        grid = SurveillanceGrid(
            n_x=int(g["n_x"]), n_y=int(g["n_y"]),
            delta_x=float(g.get("delta_x", g.get("delta", 0.1))),
            delta_y=float(g.get("delta_y", g.get("delta", 0.1))),
        )
    except KeyError as e:
        raise ScenarioError(f"grid: missing field {e.args[0]!r}") from None

    s = _section(doc, "sensors")
    positions = s.get("positions")
    if not isinstance(positions, list):
        raise ScenarioError("sensors: 'positions' must be a list of [x, y]")
    tx = doc.get("transmitter")
    if isinstance(tx, dict):
        tx = tx.get("position")
    layout = SensorLayout(
        mode=str(s.get("mode", "monostatic")),
        sensors=tuple(_point(p, f"sensors.positions[{i}]") for i, p in enumerate(positions)),
        transmitter=None if tx is None else _point(tx, "transmitter"),
    )

    t = _section(doc, "targets")
    targets = []
    for i, tr in enumerate(t.get("tracks", []) or []):
        wps = tr.get("waypoints") if isinstance(tr, dict) else None
        if not isinstance(wps, list):
            raise ScenarioError(f"targets.tracks[{i}]: 'waypoints' must be a list of [scan, x, y]")
        try:
            targets.append(Target(tuple((int(w[0]), float(w[1]), float(w[2])) for w in wps)))
        except (TypeError, ValueError, IndexError):
            raise ScenarioError(f"targets.tracks[{i}]: waypoint entries must be [scan, x, y]") from None
    try:
        truth = GroundTruth(
            targets=tuple(targets),
            scan_count=int(t["scan_count"]),
            scan_period=float(t.get("scan_period", 0.45)),
        )
    except KeyError:
        raise ScenarioError("targets: missing field 'scan_count'") from None

    params = _build_params(_section(doc, "params", required=False))
    echo = EchoModel.from_dict(_section(doc, "echo", required=False))
    return ScenarioSpec(name=str(doc.get("name", name)), grid=grid, layout=layout,
                        truth=truth, params=params, echo=echo)


def load_scenario(document: str, name: str = "scenario") -> ScenarioSpec:
    """Parse and validate a scenario document given as YAML text."""
    try:
        doc = yaml.safe_load(document)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioError(f"parse error{where}: {getattr(e, 'problem', e)}") from None
    return scenario_from_dict(doc, name=name)


BUNDLED_DIR = Path(__file__).parent / "scenarios"


def bundled_scenarios() -> list[str]:
    return sorted(p.stem for p in BUNDLED_DIR.glob("*.yaml"))


def load_scenario_file(path_or_name: str | Path) -> ScenarioSpec:
    """Load a scenario from a path, or by bundled name (e.g. ``exp1_test1``)."""
    p = Path(path_or_name)
    if not p.exists():
        bundled = BUNDLED_DIR / f"{path_or_name}.yaml"
        if not bundled.exists():
            raise FileNotFoundError(f"no scenario file or bundled scenario named {str(path_or_name)!r}")
        p = bundled
    return load_scenario(p.read_text(), name=p.stem)


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    params = dataclasses.asdict(spec.params)
    params["seed_spacing"] = list(params["seed_spacing"])
    doc = {
        "name": spec.name,
        "grid": dataclasses.asdict(spec.grid),
        "sensors": {"mode": spec.layout.mode, "positions": [list(p) for p in spec.layout.sensors]},
        "targets": {
            "scan_count": spec.truth.scan_count,
            "scan_period": spec.truth.scan_period,
            "tracks": [{"waypoints": [list(w) for w in t.waypoints]} for t in spec.truth.targets],
        },
        "params": params,
    }
    if spec.layout.transmitter is not None:
        doc["transmitter"] = {"position": list(spec.layout.transmitter)}
    if spec.echo is not None:
        doc["echo"] = spec.echo.to_dict()
    return doc


def dump_scenario(spec: ScenarioSpec) -> str:
    return yaml.safe_dump(scenario_to_dict(spec), sort_keys=False)


def with_cell_size(spec: ScenarioSpec, delta: float, reference_delta: float = 0.1) -> ScenarioSpec:
    """Re-grid the same surveillance area with square cells of side ``delta``.

    Size-related parameters (region cardinality, seed spacing, smoothing
    half-width) are rescaled from their values at ``reference_delta`` so a
    target covers the same physical area in every setting.
    """
    if delta <= 0:
        raise ScenarioError("delta must be > 0")
    width, height = spec.grid.extent
    grid = SurveillanceGrid(n_x=max(1, round(width / delta)), n_y=max(1, round(height / delta)),
                            delta_x=delta, delta_y=delta)
    lin = reference_delta / delta
    p = spec.params
    dx, dy, dt = p.seed_spacing
    params = dataclasses.replace(
        p,
        gamma_num=max(1, round(p.gamma_num * lin * lin)),
        seed_spacing=(max(1, round(dx * lin)), max(1, round(dy * lin)), dt),
        smooth_w=max(1, round(p.smooth_w * lin)) if p.smooth_w else 0,
    )
    return dataclasses.replace(spec, grid=grid, params=params)

"""Circle/ellipse voting, multiplicative fusion, adaptive thresholding and
score-map clutter suppression."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .scenario import SPEED_OF_LIGHT, SensorLayout, SurveillanceGrid

# relative slack for tangent curves
_TOUCH_EPS = 1e-9


@dataclass
class ScoreMap:
    values: np.ndarray
    scan: int
    kind: str
    threshold: float | None = None

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("score map values must be 2-D")


def votes_from_profile(m, alpha: float) -> np.ndarray:
    """Peak-suppressed votes m^alpha normalized by their mean."""
    m = np.asarray(m, dtype=float)
    powered = m ** alpha
    mean = powered.mean()
    if mean == 0:
        raise ZeroDivisionError("all-zero profile has no votes")
    return powered / mean


def _cell_edges(grid: SurveillanceGrid):
    x0 = np.arange(grid.n_x)[:, None] * grid.delta_x
    y0 = np.arange(grid.n_y)[None, :] * grid.delta_y
    x0 = np.broadcast_to(x0, grid.shape)
    y0 = np.broadcast_to(y0, grid.shape)
    return x0, x0 + grid.delta_x, y0, y0 + grid.delta_y


def _circle_range(grid: SurveillanceGrid, cx: float, cy: float):
    """Min and max distance from (cx, cy) to each closed cell square."""
    x0, x1, y0, y1 = _cell_edges(grid)
    dx = np.maximum(np.maximum(x0 - cx, cx - x1), 0.0)
    dy = np.maximum(np.maximum(y0 - cy, cy - y1), 0.0)
    dmin = np.hypot(dx, dy)
    fx = np.maximum(np.abs(cx - x0), np.abs(cx - x1))
    fy = np.maximum(np.abs(cy - y0), np.abs(cy - y1))
    return dmin, np.hypot(fx, fy)


def _edge_min(t, r, line, lo, hi, t_perp, r_perp):
    """Min of |p-T| + |p-R| for p on the axis-parallel edge perp=line, along in [lo, hi].

    ``t``/``r`` are the foci coordinates along the edge, ``*_perp`` across it.
    """
    st = t_perp - line
    sr = r_perp - line
    # reflect R to the far side when both foci are strictly on the same side
    same = st * sr > 0
    r_perp_eff = np.where(same, 2 * line - r_perp, r_perp)
    denom = r_perp_eff - t_perp
    on_line = np.abs(denom) < 1e-15
    safe = np.where(on_line, 1.0, denom)
    cross = t + (r - t) * (line - t_perp) / safe
    # both foci on the edge line: minimizers form the interval between them
    mid = 0.5 * (lo + hi)
    collinear = np.clip(mid, np.minimum(t, r), np.maximum(t, r))
    along = np.clip(np.where(on_line, collinear, cross), lo, hi)
    return np.hypot(along - t, line - t_perp) + np.hypot(along - r, line - r_perp)


def _ellipse_range(grid: SurveillanceGrid, tx, ty, rx, ry):
    """Min and max of the focal-distance sum over each closed cell square."""
    x0, x1, y0, y1 = _cell_edges(grid)
    corners = [(x0, y0), (x0, y1), (x1, y0), (x1, y1)]
    fmax = np.max([np.hypot(x - tx, y - ty) + np.hypot(x - rx, y - ry) for x, y in corners], axis=0)
    fmin = np.minimum.reduce([
        _edge_min(tx, rx, y0, x0, x1, ty, ry),
        _edge_min(tx, rx, y1, x0, x1, ty, ry),
        _edge_min(ty, ry, x0, y0, y1, tx, rx),
        _edge_min(ty, ry, x1, y0, y1, tx, rx),
    ])
    base = np.hypot(rx - tx, ry - ty)
    inside = ((x0 <= tx) & (tx <= x1) & (y0 <= ty) & (ty <= y1)) | ((x0 <= rx) & (rx <= x1) & (y0 <= ry) & (ry <= y1))
    fmin = np.where(inside, base, fmin)
    return fmin, fmax


def delay_range(layout: SensorLayout, sensor: int, grid: SurveillanceGrid):
    """Per-cell (min, max) delay, in seconds, of curves crossing each cell."""
    sx, sy = layout.sensors[sensor]
    if layout.mode == "monostatic":
        dmin, dmax = _circle_range(grid, sx, sy)
        return 2.0 * dmin / SPEED_OF_LIGHT, 2.0 * dmax / SPEED_OF_LIGHT
    tx, ty = layout.transmitter
    fmin, fmax = _ellipse_range(grid, tx, ty, sx, sy)
    base = layout.baseline_lengths[sensor]
    return (fmin - base) / SPEED_OF_LIGHT, (fmax - base) / SPEED_OF_LIGHT


def rasterize_curve(layout: SensorLayout, sensor: int, delay: float, grid: SurveillanceGrid) -> set[tuple[int, int]]:
    """1-based cells whose closed square the constant-delay curve touches."""
    if delay < 0:
        raise ValueError("delay must be >= 0")
    lo, hi = delay_range(layout, sensor, grid)
    slack = _TOUCH_EPS * max(delay, 1e-12)
    ix, iy = np.nonzero((lo <= delay + slack) & (delay - slack <= hi))
    return {(int(a) + 1, int(b) + 1) for a, b in zip(ix, iy)}


class VotingGeometry:
    """Per-sensor range of bin indices whose curve crosses each cell.

    Bin j (0-based) corresponds to delay j * sample_period.
    """

    def __init__(self, layout: SensorLayout, grid: SurveillanceGrid, n_c: int, sample_period: float):
        self.layout, self.grid, self.n_c = layout, grid, n_c
        self.lo, self.hi = [], []
        for n in range(layout.n_r):
            dmin, dmax = delay_range(layout, n, grid)
            lo = np.ceil(dmin / sample_period - _TOUCH_EPS).astype(np.int64)
            hi = np.floor(dmax / sample_period + _TOUCH_EPS).astype(np.int64)
            lo = np.maximum(lo, 0)
            hi = np.minimum(hi, n_c - 1)
            self.lo.append(lo)
            self.hi.append(hi)
        self.width = max(int(np.max(h - l)) + 1 if np.any(h >= l) else 0 for l, h in zip(self.lo, self.hi))

    def cell_max(self, sensor: int, votes: np.ndarray) -> np.ndarray:
        lo, hi = self.lo[sensor], self.hi[sensor]
        out = np.zeros(lo.shape)
        last = len(votes) - 1
        for o in range(self.width):
            idx = lo + o
            valid = idx <= hi
            if not valid.any():
                break
            np.maximum(out, np.where(valid, votes[np.minimum(idx, last)], 0.0), out=out)
        return out


def sensor_score_map(m, layout: SensorLayout, sensor: int, grid: SurveillanceGrid, alpha: float,
                     sample_period: float = 61e-12, geometry: VotingGeometry | None = None,
                     scan: int = 0) -> ScoreMap:
    """Largest vote received by each cell from one sensor's profile."""
    samples = m.samples if hasattr(m, "samples") else np.asarray(m, dtype=float)
    votes = votes_from_profile(samples, alpha)
    if geometry is None:
        geometry = VotingGeometry(layout, grid, len(samples), sample_period)
    return ScoreMap(geometry.cell_max(sensor, votes), scan, "per-sensor")


def fuse(maps: list[ScoreMap]) -> ScoreMap:
    if not maps:
        raise ValueError("no maps to fuse")
    shape = maps[0].values.shape
    if any(m.values.shape != shape for m in maps):
        raise ValueError("score map dimension mismatch")
    total = np.ones(shape)
    for m in maps:
        total = total * m.values
    return ScoreMap(total, maps[0].scan, "fused-raw")


def adaptive_threshold(values: np.ndarray, beta: float) -> float:
    return beta * float(values.sum()) / values.size


def threshold_map(smap: ScoreMap, beta: float, kind: str = "fused-thresholded") -> ScoreMap:
    eta = adaptive_threshold(smap.values, beta)
    return ScoreMap(np.where(smap.values > eta, smap.values, 0.0), smap.scan, kind, eta)


def fuse_and_threshold(maps: list[ScoreMap], beta: float) -> ScoreMap:
    """Product of per-sensor maps with cells at or below beta times the mean zeroed."""
    return threshold_map(fuse(maps), beta)


def clutter_density_map(history: list[ScoreMap]) -> ScoreMap:
    if not history:
        raise ValueError("clutter density needs at least one past map")
    vals = np.mean([h.values for h in history], axis=0)
    return ScoreMap(vals, history[-1].scan, "clutter-density")


def suppress_clutter(current: ScoreMap, density: ScoreMap, floor: float = 1e-6) -> ScoreMap:
    if current.values.shape != density.values.shape:
        raise ValueError("score map dimension mismatch")
    if floor <= 0:
        raise ValueError("floor must be > 0")
    return ScoreMap(current.values / np.maximum(density.values, floor), current.scan, "clutter-suppressed")


class ClutterSuppressor:
    """Keeps the last V thresholded maps and divides new maps by their mean."""

    def __init__(self, v_window: int, floor: float = 1e-6):
        self.history: deque[ScoreMap] = deque(maxlen=v_window)
        self.floor = floor

    def apply(self, smap: ScoreMap) -> ScoreMap:
        if self.history:
            out = suppress_clutter(smap, clutter_density_map(list(self.history)), self.floor)
        else:
            out = smap
        self.history.append(smap)
        return out

"""Tracklet generation and association, outlier removal, smoothing, and the
centroid-only baseline."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .points import Measurement
from .volume import Region


@dataclass(frozen=True)
class TrackPoint:
    x: float
    y: float
    scan: int
    score: float
    error: float
    smoothed: bool = False


@dataclass(frozen=True)
class Tracklet:
    points: tuple[Measurement, ...]
    score: float
    errors: tuple[float, ...]
    window_start: int


@dataclass
class Trajectory:
    id: int
    points: dict[int, TrackPoint] = field(default_factory=dict)
    status: str = "active"
    windows: list[int] = field(default_factory=list)
    # score of the tracklet that supplied each point
    support: dict[int, float] = field(default_factory=dict)

    def sorted_points(self) -> list[TrackPoint]:
        return [self.points[s] for s in sorted(self.points)]

    @property
    def last_window(self) -> int:
        return self.windows[-1] if self.windows else -1


def _loo_weights(scans, k: int) -> list[float]:
    """Weights w_i with the affine least-squares fit of the other points
    evaluated at position k equal to sum_i w_i * value_i (w_k = 0)."""
    others = [t for i, t in enumerate(scans) if i != k]
    if len(set(others)) < 2:
        raise ValueError("line fit needs at least two distinct scans")
    n = len(others)
    mean = sum(others) / n
    sxx = sum((t - mean) ** 2 for t in others)
    tk = scans[k]
    return [0.0 if i == k else 1.0 / n + (tk - mean) * (t - mean) / sxx for i, t in enumerate(scans)]


def _residuals(xs, ys, scans, floor: float):
    """Floored leave-one-out fit errors for arrays shaped (..., W)."""
    w = len(scans)
    out = []
    for k in range(w):
        wk = _loo_weights(scans, k)
        px = 0.0
        py = 0.0
        for i in range(w):
            if i != k:
                px = px + wk[i] * xs[..., i]
                py = py + wk[i] * ys[..., i]
        out.append(np.maximum(np.hypot(xs[..., k] - px, ys[..., k] - py), floor))
    return out


def fit_error(points, k: int, floor: float = 1e-3) -> float:
    """Distance from the point at scan ``k`` to the line fitted through the others."""
    scans = [pt.scan for pt in points]
    if len(points) < 3:
        raise ValueError("fit error needs at least three points")
    if k not in scans:
        raise ValueError(f"scan {k} is not among the points")
    idx = scans.index(k)
    xs = np.array([pt.x for pt in points])
    ys = np.array([pt.y for pt in points])
    return float(_residuals(xs, ys, scans, floor)[idx])


def tracklet_score(points, floor: float = 1e-3) -> float:
    """Product of point scores over product of floored fit errors."""
    ordered = sorted(points, key=lambda p: p.scan)
    errs = [fit_error(ordered, p.scan, floor) for p in ordered]
    num = 1.0
    den = 1.0
    for p, d in zip(ordered, errs):
        num = num * p.score
        den = den * d
    return num / den


def enumerate_tracklets(window: dict[int, list[Measurement]], floor: float = 1e-3, cap: int = 5,
                        relative_threshold: float = 0.01, max_points_per_scan: int | None = None) -> list[Tracklet]:
    """Score every one-point-per-scan combination and keep the best.

    Tracklets scoring below ``relative_threshold`` times the window's best
    are dropped, then at most ``cap`` remain, best first. A scan without
    points yields no tracklets.
    """
    scans = sorted(window)
    if not scans or any(not window[s] for s in scans):
        return []
    per_scan = []
    for s in scans:
        pts = list(window[s])
        if max_points_per_scan is not None and len(pts) > max_points_per_scan:
            pts = sorted(pts, key=lambda m: -m.score)[:max_points_per_scan]
        per_scan.append(pts)
    grids = np.meshgrid(*[np.arange(len(p)) for p in per_scan], indexing="ij")
    combos = np.stack([g.ravel() for g in grids], axis=1)
    xs = np.stack([np.array([m.x for m in pts])[combos[:, i]] for i, pts in enumerate(per_scan)], axis=1)
    ys = np.stack([np.array([m.y for m in pts])[combos[:, i]] for i, pts in enumerate(per_scan)], axis=1)
    ps = np.stack([np.array([m.score for m in pts])[combos[:, i]] for i, pts in enumerate(per_scan)], axis=1)
    errs = _residuals(xs, ys, scans, floor)
    num = np.ones(len(combos))
    den = np.ones(len(combos))
    for i in range(len(scans)):
        num = num * ps[:, i]
        den = den * errs[i]
    score = num / den
    best = score.max()
    if not best > 0:
        return []
    keep = np.flatnonzero(score >= relative_threshold * best)
    # stable sort keeps enumeration order among equal scores
    keep = keep[np.argsort(-score[keep], kind="stable")][:cap]
    out = []
    for c in keep:
        pts = tuple(per_scan[i][combos[c, i]] for i in range(len(scans)))
        out.append(Tracklet(pts, float(score[c]), tuple(float(e[c]) for e in errs), scans[0]))
    return out


def _line_predict(points: list[TrackPoint], scan: float) -> tuple[float, float]:
    t = np.array([p.scan for p in points], dtype=float)
    if len(set(t)) < 2:
        return points[-1].x, points[-1].y
    a = np.vstack([t, np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(a, np.array([[p.x, p.y] for p in points]), rcond=None)
    return float(coef[0, 0] * scan + coef[1, 0]), float(coef[0, 1] * scan + coef[1, 1])


class Associator:
    """Sequential fold of per-window tracklets into trajectories."""

    def __init__(self, radius: float = 0.15, bridge_gate: float = 0.6, window_w: int = 4,
                 separation: float = 0.0):
        self.radius = radius
        self.bridge_gate = bridge_gate
        self.window_w = window_w
        self.separation = separation
        self.trajectories: list[Trajectory] = []

    def _shared(self, traj: Trajectory, tl: Tracklet) -> int:
        n = 0
        for m in tl.points:
            p = traj.points.get(m.scan)
            if p is not None and math.hypot(p.x - m.x, p.y - m.y) <= self.radius:
                n += 1
        return n

    def _bridge_distance(self, traj: Trajectory, tl: Tracklet) -> float:
        pts = traj.sorted_points()[-self.window_w:]
        first = tl.points[0]
        if first.scan <= pts[-1].scan:
            return math.inf
        px, py = _line_predict(pts, first.scan)
        return math.hypot(px - first.x, py - first.y)

    def update(self, window_index: int, tracklets: list[Tracklet]) -> None:
        active = [t for t in self.trajectories if t.status == "active"]
        claimed: list[Measurement] = []
        accepted: list[Tracklet] = []
        extended: set[int] = set()
        for tl in sorted(tracklets, key=lambda t: -t.score):
            if any(c.scan == m.scan and math.hypot(c.x - m.x, c.y - m.y) <= self.radius
                   for m in tl.points for c in claimed):
                continue
            free = [t for t in active if t.id not in extended]
            target = None
            shared = [(self._shared(t, tl), -t.id, t) for t in free]
            shared = [s for s in shared if s[0] > 0]
            if shared:
                target = max(shared, key=lambda s: (s[0], s[1]))[2]
            else:
                gaps = [(self._bridge_distance(t, tl), t.id, t) for t in free
                        if t.last_window == window_index - 2]
                gaps = [g for g in gaps if g[0] <= self.bridge_gate]
                if gaps:
                    target = min(gaps, key=lambda g: (g[0], g[1]))[2]
            if target is None and self.separation > 0 and any(
                    _mean_distance(tl, other) < self.separation for other in accepted):
                continue
            if target is None:
                target = Trajectory(len(self.trajectories) + 1)
                self.trajectories.append(target)
            for m, d in zip(tl.points, tl.errors):
                if m.scan not in target.points or tl.score > target.support[m.scan]:
                    target.points[m.scan] = TrackPoint(m.x, m.y, m.scan, m.score, d)
                    target.support[m.scan] = tl.score
            target.windows.append(window_index)
            extended.add(target.id)
            claimed.extend(tl.points)
            accepted.append(tl)
        for t in active:
            if t.id not in extended and window_index - t.last_window > 1:
                t.status = "terminated"

    def confirmed(self, min_windows: int = 2) -> list[Trajectory]:
        return [t for t in self.trajectories if len(t.windows) >= min_windows]


def _mean_distance(a: Tracklet, b: Tracklet) -> float:
    by_scan = {m.scan: m for m in b.points}
    ds = [math.hypot(m.x - by_scan[m.scan].x, m.y - by_scan[m.scan].y) for m in a.points if m.scan in by_scan]
    return sum(ds) / len(ds) if ds else math.inf


def associate(windows: list[list[Tracklet]], radius: float = 0.15, bridge_gate: float = 0.6,
              window_w: int = 4, separation: float = 0.0) -> list[Trajectory]:
    """Link tracklets of successive windows that share points into trajectories."""
    assoc = Associator(radius, bridge_gate, window_w, separation)
    for q, tls in enumerate(windows):
        assoc.update(q, tls)
    return assoc.trajectories


def _window_bounds(i: int, n: int, w: int) -> tuple[int, int]:
    """Index range [lo, hi) of the (w+1)-point window centred on i, shifted inward at the ends."""
    half = w // 2
    lo = min(max(i - half, 0), n - (w + 1))
    return lo, lo + w + 1


def _fit_others(pts: list[TrackPoint], lo: int, hi: int, i: int) -> tuple[float, float]:
    others = [pts[j] for j in range(lo, hi) if j != i]
    return _line_predict(others, pts[i].scan)


def remove_outliers(points: list[TrackPoint], nu: float = 3.0, window_w: int = 4,
                    floor: float = 1e-3) -> list[TrackPoint]:
    """Replace points whose fit error is at least nu times the mean of their
    window neighbors' errors with the line fit through those neighbors."""
    pts = list(points)
    n = len(pts)
    half = window_w // 2
    if n <= 2 * half or n < window_w + 1:
        return pts
    for i in range(n):
        lo, hi = _window_bounds(i, n, window_w)
        neigh = sum(pts[j].error for j in range(lo, hi) if j != i)
        if pts[i].error >= nu / (2 * half) * neigh:
            x, y = _fit_others(pts, lo, hi, i)
            pts[i] = TrackPoint(x, y, pts[i].scan, pts[i].score, floor, pts[i].smoothed)
    return pts


def smooth_trajectory(points: list[TrackPoint], window_w: int = 4) -> list[TrackPoint]:
    """Replace every point by the line fit through the other W points of its window."""
    pts = list(points)
    n = len(pts)
    if n < window_w + 1:
        return pts
    out = []
    for i in range(n):
        lo, hi = _window_bounds(i, n, window_w)
        x, y = _fit_others(pts, lo, hi, i)
        out.append(dataclasses.replace(pts[i], x=x, y=y, smoothed=True))
    return out


def finalize(traj: Trajectory, nu: float, window_w: int, floor: float) -> list[TrackPoint]:
    return smooth_trajectory(remove_outliers(traj.sorted_points(), nu, window_w, floor), window_w)


def region_centroids(regions: list[Region], base_scan: int, grid) -> dict[int, list[TrackPoint]]:
    """Unweighted centroid of each region's cells in every layer."""
    out: dict[int, list[TrackPoint]] = {}
    for r in regions:
        for k in np.unique(r.cells[:, 2]):
            cells = r.layer_cells(int(k))
            x = float(((cells[:, 0] + 0.5) * grid.delta_x).mean())
            y = float(((cells[:, 1] + 0.5) * grid.delta_y).mean())
            out.setdefault(base_scan + int(k), []).append(TrackPoint(x, y, base_scan + int(k), float(len(cells)), 0.0))
    return out


def simple_baseline(window_regions, grid, gating: float = 0.7, window_w: int = 4,
                    max_gap: int = 2, min_points: int | None = None) -> list[list[TrackPoint]]:
    """Centroid-only tracks: region-layer centroids linked by nearest neighbor, then smoothed.

    ``window_regions`` is a sequence of ``(base_scan, opened regions)`` in
    window order; a scan takes its centroids from the latest window covering it.
    """
    per_scan: dict[int, list[TrackPoint]] = {}
    for base, regions in window_regions:
        cents = region_centroids(regions, base, grid)
        for k in range(base, base + window_w):
            per_scan[k] = cents.get(k, [])
    tracks: list[list[TrackPoint]] = []
    open_tracks: list[list[TrackPoint]] = []
    for scan in sorted(per_scan):
        open_tracks = [t for t in open_tracks if scan - t[-1].scan <= max_gap]
        free = list(open_tracks)
        for p in sorted(per_scan[scan], key=lambda p: -p.score):
            best = None
            for t in free:
                d = math.hypot(t[-1].x - p.x, t[-1].y - p.y)
                if d <= gating and (best is None or d < best[0]):
                    best = (d, t)
            if best is None:
                t = [p]
                tracks.append(t)
                open_tracks.append(t)
            else:
                best[1].append(p)
                free.remove(best[1])
    min_points = window_w if min_points is None else min_points
    return [smooth_trajectory(t, window_w) for t in tracks if len(t) >= min_points]

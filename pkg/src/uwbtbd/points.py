"""Scored point extraction from the layers of an opened score volume."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .scenario import SurveillanceGrid
from .volume import Region, ScoreVolume

_NEIGHBORS8 = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


@dataclass(frozen=True)
class Measurement:
    x: float
    y: float
    scan: int
    score: float
    region: int = 0


@dataclass
class Cluster:
    cells: frozenset[tuple[int, int]]
    peak: tuple[int, int]
    region_id: int = 0
    layer: int = 0


def smooth_layer(layer: np.ndarray, w: int) -> np.ndarray:
    """(2w+1)x(2w+1) box mean; taps beyond the grid count as zero."""
    if w < 0:
        raise ValueError("w must be >= 0")
    if w == 0:
        return np.asarray(layer, dtype=float).copy()
    size = 2 * w + 1
    box = ndimage.correlate(np.asarray(layer, dtype=float), np.ones((size, size)), mode="constant", cval=0.0)
    return box / size ** 2


def local_maxima(layer: np.ndarray) -> list[tuple[int, int]]:
    """Positive cells strictly above every existing 8-neighbor."""
    layer = np.asarray(layer, dtype=float)
    padded = np.pad(layer, 1, constant_values=-np.inf)
    n_x, n_y = layer.shape
    is_max = layer > 0
    for dx, dy in _NEIGHBORS8:
        is_max &= layer > padded[1 + dx:1 + dx + n_x, 1 + dy:1 + dy + n_y]
    return [(int(a), int(b)) for a, b in np.argwhere(is_max)]


def interp_many(layer: np.ndarray, grid: SurveillanceGrid, x, y) -> np.ndarray:
    """Bilinear interpolation between cell centers; queries past the outer
    centers are clamped onto the nearest 2x2 patch edge."""
    layer = np.asarray(layer, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n_x, n_y = layer.shape

    def axis(coord, delta, n):
        u = coord / delta - 0.5
        near = np.round(u)
        u = np.where(np.abs(u - near) < 1e-9, near, u)
        if n == 1:
            z = np.zeros(u.shape, dtype=np.int64)
            return z, z, np.zeros(u.shape)
        i0 = np.clip(np.floor(u), 0, n - 2).astype(np.int64)
        f = np.clip(u - i0, 0.0, 1.0)
        return i0, i0 + 1, f

    i0, i1, fx = axis(x, grid.delta_x, n_x)
    j0, j1, fy = axis(y, grid.delta_y, n_y)
    return ((1 - fx) * (1 - fy) * layer[i0, j0] + (1 - fx) * fy * layer[i0, j1]
            + fx * (1 - fy) * layer[i1, j0] + fx * fy * layer[i1, j1])


def interp(layer: np.ndarray, grid: SurveillanceGrid, x: float, y: float) -> float:
    return float(interp_many(layer, grid, x, y))


def _segment_pass(layer, grid, peak, tests: np.ndarray, n: int) -> np.ndarray:
    """Vectorized segment test of many candidate cells against one peak."""
    px, py = (peak[0] + 0.5) * grid.delta_x, (peak[1] + 0.5) * grid.delta_y
    pz = layer[peak]
    tx = (tests[:, 0] + 0.5) * grid.delta_x
    ty = (tests[:, 1] + 0.5) * grid.delta_y
    tz = layer[tests[:, 0], tests[:, 1]]
    h = np.arange(1, n)[None, :] / n
    chi = (1 - h) * px + h * tx[:, None]
    psi = (1 - h) * py + h * ty[:, None]
    height = (1 - h) * pz + h * tz[:, None]
    surface = interp_many(layer, grid, chi, psi)
    tol = 1e-12 * max(abs(pz), 1.0)
    return np.all(surface >= height - tol, axis=1)


def segment_test(layer: np.ndarray, grid: SurveillanceGrid, peak, test, n: int) -> bool:
    """True when the n-1 interior points of the 3-D segment from the peak to
    the test cell all lie on or below the interpolated surface."""
    if n < 2:
        raise ValueError("segment count must be >= 2")
    layer = np.asarray(layer, dtype=float)
    return bool(_segment_pass(layer, grid, tuple(peak), np.array([test]), n)[0])


def grow_cluster(layer: np.ndarray, grid: SurveillanceGrid, peak, n: int, region_id: int = 0,
                 layer_index: int = 0) -> Cluster:
    """Grow an 8-connected cluster of positive cells that pass the segment test."""
    layer = np.asarray(layer, dtype=float)
    peak = (int(peak[0]), int(peak[1]))
    n_x, n_y = layer.shape
    members = {peak}
    tested = {peak}
    frontier = [peak]
    while frontier:
        cand = []
        for cx, cy in frontier:
            for dx, dy in _NEIGHBORS8:
                c = (cx + dx, cy + dy)
                if c in tested or not (0 <= c[0] < n_x and 0 <= c[1] < n_y):
                    continue
                tested.add(c)
                if layer[c] > 0:
                    cand.append(c)
        if not cand:
            break
        ok = _segment_pass(layer, grid, peak, np.array(cand), n)
        frontier = [c for c, passed in zip(cand, ok) if passed]
        members.update(frontier)
    return Cluster(frozenset(members), peak, region_id, layer_index)


def extract_measurement(cluster: Cluster, layer: np.ndarray, grid: SurveillanceGrid, scan: int,
                        score_floor: float = 0.0) -> Measurement | None:
    """Score-weighted centroid with score mean * variance * cardinality."""
    cells = np.array(sorted(cluster.cells))
    m = np.asarray(layer, dtype=float)[cells[:, 0], cells[:, 1]]
    total = m.sum()
    if total <= 0:
        return None
    xc = (cells[:, 0] + 0.5) * grid.delta_x
    yc = (cells[:, 1] + 0.5) * grid.delta_y
    mean = m.mean()
    score = float(mean * m.var() * len(m))
    if score < score_floor:
        return None
    return Measurement(float(xc @ m / total), float(yc @ m / total), scan, score, cluster.region_id)


def layer_clusters(layer_raw: np.ndarray, region_layer: np.ndarray, grid: SurveillanceGrid,
                   w: int, n: int, layer_index: int = 0):
    """Smooth one layer and grow a cluster around each local maximum.

    ``region_layer`` holds region ids (0 outside); each peak inherits the id
    of the nearest region cell.
    """
    smoothed = smooth_layer(layer_raw, w)
    peaks = local_maxima(smoothed)
    if not peaks:
        return smoothed, []
    if region_layer.any():
        _, (ix, iy) = ndimage.distance_transform_edt(region_layer == 0, return_indices=True)
        owner = region_layer[ix, iy]
    else:
        owner = region_layer
    clusters = [grow_cluster(smoothed, grid, p, n, int(owner[p]), layer_index) for p in peaks]
    return smoothed, clusters


def generate_points(regions: list[Region], volume: ScoreVolume, grid: SurveillanceGrid,
                    smooth_w: int = 3, segment_n: int = 10, score_floor: float = 0.0) -> dict[int, list[Measurement]]:
    """Measurements per scan of the window, from every layer of the opened volume."""
    out: dict[int, list[Measurement]] = {scan: [] for scan in volume.scans}
    if not regions:
        return out
    region_id = np.zeros(volume.values.shape, dtype=np.int32)
    for r in regions:
        region_id[tuple(r.cells.T)] = r.id
    for k, scan in enumerate(volume.scans):
        layer = volume.values[:, :, k]
        if not layer.any():
            continue
        smoothed, clusters = layer_clusters(layer, region_id[:, :, k], grid, smooth_w, segment_n, k)
        for cl in clusters:
            z = extract_measurement(cl, smoothed, grid, scan, score_floor)
            if z is not None:
                out[scan].append(z)
    return out

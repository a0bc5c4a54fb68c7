"""Sliding-window score volumes, seeded 3D region growing and 3D opening.

Volume cells are addressed by 0-based array indices ``(ix, iy, layer)``;
seed cells follow the 1-based ``(i_x, i_y, scan)`` convention of the grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .voting import ScoreMap

Cell = tuple[int, int, int]

# origin plus its six face neighbors
CROSS_OFFSETS: frozenset[Cell] = frozenset({
    (0, 0, 0), (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1),
})
_CUBE = np.ones((3, 3, 3), dtype=bool)


@dataclass(frozen=True)
class StructuringElement:
    offsets: frozenset[Cell] = CROSS_OFFSETS

    def __post_init__(self):
        if (0, 0, 0) not in self.offsets:
            raise ValueError("structuring element must contain its origin")

    def at(self, cell: Cell) -> set[Cell]:
        x, y, k = cell
        return {(x + a, y + b, k + c) for a, b, c in self.offsets}


CROSS = StructuringElement()


@dataclass
class ScoreVolume:
    values: np.ndarray
    base_scan: int

    @property
    def window(self) -> int:
        return self.values.shape[2]

    @property
    def scans(self) -> range:
        return range(self.base_scan, self.base_scan + self.window)


@dataclass
class Region:
    id: int
    cells: np.ndarray  # (n, 3) int array of (ix, iy, layer)
    total_score: float
    seeds: list = field(default_factory=list)

    def __len__(self):
        return len(self.cells)

    def cell_set(self) -> set[Cell]:
        return {tuple(int(v) for v in c) for c in self.cells}

    def layer_cells(self, layer: int) -> np.ndarray:
        return self.cells[self.cells[:, 2] == layer][:, :2]


def window_ends(scan_count: int, window_w: int, stride_s: int) -> list[int]:
    """Scans t = W + q*s at which a window is processed."""
    return list(range(window_w, scan_count + 1, stride_s))


def stack_window(maps: list[ScoreMap], window_w: int | None = None) -> ScoreVolume:
    if not maps:
        raise ValueError("no maps to stack")
    if window_w is not None and len(maps) != window_w:
        raise ValueError(f"expected {window_w} maps, got {len(maps)}")
    shape = maps[0].values.shape
    if any(m.values.shape != shape for m in maps):
        raise ValueError("score map dimension mismatch")
    scans = [m.scan for m in maps]
    if any(b != a + 1 for a, b in zip(scans, scans[1:])):
        raise ValueError(f"maps must cover consecutive scans, got {scans}")
    return ScoreVolume(np.stack([m.values for m in maps], axis=2).astype(float), scans[0])


def seed_cells(volume: ScoreVolume, d_x: int, d_y: int, d_t: int = 1) -> list[tuple[int, int, int]]:
    """Evenly spaced seeds (a*d_x, b*d_y, base-1 + c*d_t), 1-based cell and scan indices."""
    n_x, n_y, w = volume.values.shape
    return [
        (a * d_x, b * d_y, volume.base_scan - 1 + c * d_t)
        for c in range(1, w // d_t + 1)
        for a in range(1, n_x // d_x + 1)
        for b in range(1, n_y // d_y + 1)
    ]


def region_grow(volume: ScoreVolume, seeds, gamma_score: float, gamma_num: int):
    """Seeded 26-connected region growing with score/cardinality gating.

    Growing from an active nonzero seed reaches exactly the seed's
    26-connected component of nonzero cells, so components are labeled once
    up front and the seed loop only decides which ones become regions.
    Returns the accepted regions and a cleaned copy of the volume that is
    zero outside them.
    """
    vals = volume.values
    labels, _ = ndimage.label(vals > 0, structure=_CUBE)
    active = {s: True for s in seeds}
    decided: dict[int, bool] = {}
    regions: list[Region] = []
    keep = np.zeros(vals.shape, dtype=bool)
    for seed in seeds:
        ix, iy, scan = seed[0] - 1, seed[1] - 1, seed[2] - volume.base_scan
        if not active[seed]:
            continue
        if not (0 <= ix < vals.shape[0] and 0 <= iy < vals.shape[1] and 0 <= scan < vals.shape[2]):
            continue
        lab = labels[ix, iy, scan]
        if lab == 0 or lab in decided:
            # rejected components were zeroed, so their seeds no longer start a region
            continue
        mask = labels == lab
        cells = np.argwhere(mask)
        total = float(vals[mask].sum())
        ok = total >= gamma_score and len(cells) >= gamma_num
        decided[lab] = ok
        if ok:
            members = [s for s in active if active[s] and labels_at(labels, s, volume.base_scan) == lab]
            for s in members:
                active[s] = False
            keep |= mask
            regions.append(Region(len(regions) + 1, cells, total, members))
    cleaned = ScoreVolume(np.where(keep, vals, 0.0), volume.base_scan)
    return regions, cleaned


def labels_at(labels: np.ndarray, seed, base_scan: int) -> int:
    ix, iy, k = seed[0] - 1, seed[1] - 1, seed[2] - base_scan
    if 0 <= ix < labels.shape[0] and 0 <= iy < labels.shape[1] and 0 <= k < labels.shape[2]:
        return int(labels[ix, iy, k])
    return 0


def _inside(cell, shape) -> bool:
    return shape is None or all(0 <= v < n for v, n in zip(cell, shape))


def erode(region, element: StructuringElement = CROSS, shape=None) -> set[Cell]:
    """Cells whose translated element lies entirely inside ``region``.

    With ``shape`` given, the lattice is the box [0, shape) and element cells
    falling outside it are ignored rather than counted as background.
    """
    region = set(region)
    return {c for c in region
            if all(e in region for e in element.at(c) if _inside(e, shape))}


def dilate(region, element: StructuringElement = CROSS, shape=None) -> set[Cell]:
    """Cells whose translated element meets ``region``."""
    reflected = {(-a, -b, -c) for a, b, c in element.offsets}
    out = set()
    for x, y, k in region:
        out.update(e for e in ((x + a, y + b, k + c) for a, b, c in reflected) if _inside(e, shape))
    return out


def open_region(region, element: StructuringElement = CROSS, shape=None) -> set[Cell]:
    return dilate(erode(region, element, shape), element, shape)


def _shift(mask: np.ndarray, offset, fill: bool = False) -> np.ndarray:
    """out[c] = mask[c + offset], ``fill`` beyond the array."""
    out = np.full_like(mask, fill)
    src, dst = [], []
    for d, n in zip(offset, mask.shape):
        if d >= 0:
            src.append(slice(d, n))
            dst.append(slice(0, n - d))
        else:
            src.append(slice(0, n + d))
            dst.append(slice(-d, n))
    out[tuple(dst)] = mask[tuple(src)]
    return out


def erode_mask(mask: np.ndarray, element: StructuringElement = CROSS) -> np.ndarray:
    out = mask.copy()
    for off in element.offsets:
        if off != (0, 0, 0):
            out &= _shift(mask, off, fill=True)
    return out


def dilate_mask(mask: np.ndarray, element: StructuringElement = CROSS) -> np.ndarray:
    out = mask.copy() if (0, 0, 0) in element.offsets else np.zeros_like(mask)
    for a, b, c in element.offsets:
        if (a, b, c) != (0, 0, 0):
            out |= _shift(mask, (-a, -b, -c))
    return out


def open_mask(mask: np.ndarray, element: StructuringElement = CROSS) -> np.ndarray:
    """Array opening; equals ``open_region(..., shape=mask.shape)``.

    The element is truncated at the array faces, so the first and last window
    layers survive when their single in-volume temporal neighbor agrees.
    """
    return dilate_mask(erode_mask(mask, element), element)


def open_regions(regions: list[Region], cleaned: ScoreVolume, element: StructuringElement = CROSS):
    """Open every region; cells removed by opening are zeroed in the returned volume.

    Regions are never 26-adjacent, so opening their union opens each one
    separately. A region whose opening is empty is dropped.
    """
    vals = cleaned.values
    region_id = np.zeros(vals.shape, dtype=np.int32)
    for r in regions:
        region_id[tuple(r.cells.T)] = r.id
    opened = open_mask(region_id > 0, element)
    out_vals = np.where(opened, vals, 0.0)
    out = []
    for r in regions:
        mask = opened & (region_id == r.id)
        if mask.any():
            out.append(Region(r.id, np.argwhere(mask), float(vals[mask].sum()), r.seeds))
    return out, ScoreVolume(out_vals, cleaned.base_scan)

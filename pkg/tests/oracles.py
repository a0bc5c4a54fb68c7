"""Slow, literal reference implementations used as test oracles."""
import itertools
import math
from collections import deque

import numpy as np

from uwbtbd.points import segment_test

NEIGHBORS26 = [d for d in itertools.product((-1, 0, 1), repeat=3) if d != (0, 0, 0)]
NEIGHBORS8 = [d for d in itertools.product((-1, 0, 1), repeat=2) if d != (0, 0)]


def region_grow_bfs(values, base_scan, seeds, gamma_score, gamma_num):
    """Seed-by-seed breadth-first growing over a volume that is zeroed as regions are rejected."""
    vals = values.copy()
    shape = vals.shape
    active = {s: True for s in seeds}
    regions = []
    for seed in seeds:
        c0 = (seed[0] - 1, seed[1] - 1, seed[2] - base_scan)
        if not active[seed] or not all(0 <= v < n for v, n in zip(c0, shape)) or vals[c0] <= 0:
            continue
        if any(c0 in r for r in regions):
            continue
        seen = {c0}
        queue = deque([c0])
        while queue:
            c = queue.popleft()
            for d in NEIGHBORS26:
                e = tuple(a + b for a, b in zip(c, d))
                if e not in seen and all(0 <= v < n for v, n in zip(e, shape)) and vals[e] > 0:
                    seen.add(e)
                    queue.append(e)
        total = sum(vals[c] for c in seen)
        if total >= gamma_score and len(seen) >= gamma_num:
            regions.append(seen)
            for s in seeds:
                if (s[0] - 1, s[1] - 1, s[2] - base_scan) in seen:
                    active[s] = False
        else:
            for c in seen:
                vals[c] = 0.0
    cleaned = np.zeros_like(vals)
    for r in regions:
        for c in r:
            cleaned[c] = values[c]
    return regions, cleaned


def cluster_closure(layer, grid, peak, n):
    """Fixed point: add any positive 8-neighbor of a member that passes the segment test."""
    members = {tuple(peak)}
    changed = True
    while changed:
        changed = False
        for c in sorted(members):
            for d in NEIGHBORS8:
                e = (c[0] + d[0], c[1] + d[1])
                if e in members or not (0 <= e[0] < layer.shape[0] and 0 <= e[1] < layer.shape[1]):
                    continue
                if layer[e] > 0 and segment_test(layer, grid, peak, e, n):
                    members.add(e)
                    changed = True
    return members


def loo_line_error(xs, ys, scans, k, floor):
    """Leave-one-out affine least-squares fit by explicit normal equations."""
    idx = [i for i in range(len(scans)) if i != k]
    t = np.array([scans[i] for i in idx], dtype=float)
    a = np.vstack([t, np.ones_like(t)]).T
    cx = np.linalg.solve(a.T @ a, a.T @ np.array([xs[i] for i in idx]))
    cy = np.linalg.solve(a.T @ a, a.T @ np.array([ys[i] for i in idx]))
    px = cx[0] * scans[k] + cx[1]
    py = cy[0] * scans[k] + cy[1]
    return max(math.hypot(xs[k] - px, ys[k] - py), floor)


def brute_force_tracklets(window, floor, cap, relative_threshold):
    """Every one-point-per-scan combination, scored, thresholded and capped."""
    scans = sorted(window)
    if any(not window[s] for s in scans):
        return []
    scored = []
    for combo in itertools.product(*[window[s] for s in scans]):
        xs = [m.x for m in combo]
        ys = [m.y for m in combo]
        errs = [loo_line_error(xs, ys, scans, k, floor) for k in range(len(scans))]
        score = math.prod(m.score for m in combo) / math.prod(errs)
        scored.append((score, combo))
    best = max(s for s, _ in scored)
    if best <= 0:
        return []
    kept = [(s, c) for s, c in scored if s >= relative_threshold * best]
    kept.sort(key=lambda sc: -sc[0])
    return kept[:cap]


def ospa_brute(x, y, c, p):
    x = [tuple(v) for v in x]
    y = [tuple(v) for v in y]
    if len(x) > len(y):
        x, y = y, x
    m, n = len(x), len(y)
    if n == 0:
        return 0.0
    best = math.inf
    for perm in itertools.permutations(range(n), m):
        s = sum(min(math.dist(x[i], y[j]), c) ** p for i, j in enumerate(perm))
        best = min(best, s)
    return ((best + (n - m) * c ** p) / n) ** (1 / p)

"""Scoring of estimated trajectories against ground truth, and Monte Carlo batches.

Positional errors E_p are averaged over the scans in which a target was
detected; missed scans only lower the detection rate.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .pipeline import RunOutput, run
from .scenario import GroundTruth, ScenarioSpec, active_targets
from .synth import EchoModel

METHODS = ("proposed", "simple-baseline")


def ospa(estimates, truth, cutoff: float = 0.7, order: float = 1.0) -> float:
    """OSPA distance between two finite point sets in the plane."""
    if cutoff <= 0 or order < 1:
        raise ValueError("need cutoff > 0 and order >= 1")
    x = np.asarray(estimates, dtype=float).reshape(-1, 2)
    y = np.asarray(truth, dtype=float).reshape(-1, 2)
    if len(x) > len(y):
        x, y = y, x
    m, n = len(x), len(y)
    if n == 0:
        return 0.0
    if m == 0:
        return float(cutoff)
    d = np.minimum(np.linalg.norm(x[:, None, :] - y[None, :, :], axis=2), cutoff) ** order
    rows, cols = linear_sum_assignment(d)
    total = d[rows, cols].sum() + (n - m) * cutoff ** order
    return float((total / n) ** (1.0 / order))


def points_at(tracks, scan: int) -> list[tuple[int, float, float]]:
    """(track index, x, y) of every track holding a point at ``scan``."""
    out = []
    for i, tr in enumerate(tracks):
        for p in tr:
            if p.scan == scan:
                out.append((i, p.x, p.y))
                break
    return out


@dataclass
class MatchResult:
    """Track-to-truth accounting for one run.

    ``present[i]`` counts scans where target i exists, ``detected[i]`` the
    scans where it is matched by a track labeled i, ``errors[i]`` the
    positional errors of those matches. ``matched[i]`` counts scans where
    target i is matched by any track, regardless of labels.
    """
    present: dict[int, int]
    detected: dict[int, int]
    errors: dict[int, list[float]]
    matched: dict[int, int]
    labels: dict[int, int | None]
    false_tracks: int
    scan_count: int

    def detection_rate(self, target: int) -> float:
        return self.detected[target] / self.present[target] if self.present[target] else math.nan

    def mean_error(self, target: int) -> float:
        e = self.errors[target]
        return float(np.mean(e)) if e else math.nan

    @property
    def false_per_scan(self) -> float:
        return self.false_tracks / self.scan_count


def match_and_score(tracks, truth: GroundTruth, gating: float = 0.7) -> MatchResult:
    """Greedy nearest-first matching of track points to targets, scan by scan.

    Each track is labeled with the target it matched most often (ties go to
    the lower target id); a track that never matches is a false-alarm track.
    """
    if gating <= 0:
        raise ValueError("gating must be > 0")
    ids = range(len(truth.targets))
    present = {i: 0 for i in ids}
    matched = {i: 0 for i in ids}
    votes = [dict() for _ in tracks]
    pairs_by_scan = []
    for scan in range(1, truth.scan_count + 1):
        tg = active_targets(truth, scan)
        for i in tg:
            present[i] += 1
        pts = points_at(tracks, scan)
        cand = sorted(
            (math.hypot(x - tx, y - ty), i, k)
            for i, (tx, ty) in tg.items()
            for k, x, y in pts
            if math.hypot(x - tx, y - ty) <= gating
        )
        used_t, used_k, pairs = set(), set(), []
        for d, i, k in cand:
            if i in used_t or k in used_k:
                continue
            used_t.add(i)
            used_k.add(k)
            pairs.append((i, k, d))
            matched[i] += 1
            votes[k][i] = votes[k].get(i, 0) + 1
        pairs_by_scan.append(pairs)
    labels = {k: (min(v, key=lambda i: (-v[i], i)) if v else None) for k, v in enumerate(votes)}
    detected = {i: 0 for i in ids}
    errors: dict[int, list[float]] = {i: [] for i in ids}
    for pairs in pairs_by_scan:
        for i, k, d in pairs:
            if labels[k] == i:
                detected[i] += 1
                errors[i].append(d)
    false_tracks = sum(1 for v in votes if not v)
    return MatchResult(present, detected, errors, matched, labels, false_tracks, truth.scan_count)


def ospa_series(tracks, truth: GroundTruth, cutoff: float = 0.7, order: float = 1.0) -> np.ndarray:
    """OSPA between all track points and all true positions, per scan 1..K."""
    out = np.empty(truth.scan_count)
    for scan in range(1, truth.scan_count + 1):
        est = [(x, y) for _, x, y in points_at(tracks, scan)]
        out[scan - 1] = ospa(est, list(active_targets(truth, scan).values()), cutoff, order)
    return out


@dataclass
class RunMetrics:
    seed: int
    method: str
    detection_rate: list[float]
    mean_error: list[float]
    false_per_scan: float
    ospa: float
    ospa_series: np.ndarray
    time: float
    n_tracks: int


def score_tracks(tracks, spec: ScenarioSpec, seed: int, method: str, elapsed: float) -> RunMetrics:
    p = spec.params
    mr = match_and_score(tracks, spec.truth, p.gating_distance)
    series = ospa_series(tracks, spec.truth, p.ospa_cutoff, p.ospa_order)
    ids = range(len(spec.truth.targets))
    return RunMetrics(seed, method, [mr.detection_rate(i) for i in ids], [mr.mean_error(i) for i in ids],
                      mr.false_per_scan, float(series.mean()), series, elapsed, len(tracks))


def score_run(out: RunOutput, spec: ScenarioSpec, seed: int, methods=("proposed",)) -> dict[str, RunMetrics]:
    res = {}
    for method in methods:
        tracks = out.tracks if method == "proposed" else out.baseline_tracks
        res[method] = score_tracks(tracks, spec, seed, method, out.method_time(method))
    return res


def run_seeds(base_seed: int, runs: int) -> list[int]:
    """Independent per-run seeds derived from one base seed."""
    children = np.random.SeedSequence(base_seed).spawn(runs)
    return [int(c.generate_state(1, dtype=np.uint32)[0]) for c in children]


@dataclass
class Aggregate:
    method: str
    runs: int
    detection_rate: list[float]
    mean_error: list[float]
    false_per_scan: float
    ospa: float
    ospa_se: float
    ospa_series: np.ndarray
    time: float

    def as_dict(self, with_time: bool = True) -> dict:
        d = {
            "method": self.method,
            "runs": self.runs,
            "P_d": [round(float(v), 6) for v in self.detection_rate],
            "E_p_m": [None if math.isnan(v) else round(float(v), 6) for v in self.mean_error],
            "N_FA_per_scan": round(float(self.false_per_scan), 6),
            "OSPA_m": round(float(self.ospa), 6),
            "OSPA_se_m": round(float(self.ospa_se), 6),
        }
        if with_time:
            d["time_s"] = round(float(self.time), 4)
        return d


def aggregate(metrics: list[RunMetrics]) -> Aggregate:
    """Arithmetic means over runs; per-target E_p ignores runs with no detection."""
    if not metrics:
        raise ValueError("no runs to aggregate")
    pd = np.array([m.detection_rate for m in metrics], dtype=float)
    ep = np.array([m.mean_error for m in metrics], dtype=float)
    ospas = np.array([m.ospa for m in metrics])
    with np.errstate(invalid="ignore"):
        ep_mean = [float(np.nanmean(col)) if np.isfinite(col).any() else math.nan for col in ep.T]
    se = float(ospas.std(ddof=1) / math.sqrt(len(ospas))) if len(ospas) > 1 else 0.0
    return Aggregate(
        metrics[0].method, len(metrics), list(np.nanmean(pd, axis=0)), ep_mean,
        float(np.mean([m.false_per_scan for m in metrics])), float(ospas.mean()), se,
        np.mean([m.ospa_series for m in metrics], axis=0), float(np.mean([m.time for m in metrics])),
    )


@dataclass
class MonteCarloResult:
    spec_name: str
    seeds: list[int]
    per_run: dict[str, list[RunMetrics]] = field(default_factory=dict)
    tracks: dict[str, list] = field(default_factory=dict)

    def summary(self, method: str) -> Aggregate:
        return aggregate(self.per_run[method])

    def paired_wins(self, a: str = "proposed", b: str = "simple-baseline") -> int:
        """Runs in which method ``a`` has strictly lower mean OSPA than ``b``."""
        return sum(x.ospa < y.ospa for x, y in zip(self.per_run[a], self.per_run[b]))


def _one_run(args):
    spec, seed, model, methods, keep_tracks, dump, index = args
    recorder = None
    if dump and any(dump.get(k) for k in ("profiles", "maps", "volumes", "points")):
        from .dumps import Recorder
        recorder = Recorder(dump["out_dir"], index, spec.params.sample_period,
                            **{k: bool(dump.get(k)) for k in ("profiles", "maps", "volumes", "points")})
    try:
        out = run(spec, seed, model, baseline="simple-baseline" in methods, recorder=recorder)
    except BaseException:
        if recorder is not None:
            recorder.abort()
        raise
    if recorder is not None:
        recorder.close()
    scored = score_run(out, spec, seed, methods)
    tracks = {m: (out.tracks if m == "proposed" else out.baseline_tracks) for m in methods} if keep_tracks else {}
    return scored, tracks


def monte_carlo(spec: ScenarioSpec, runs: int, base_seed: int = 0, model: EchoModel | None = None,
                methods=("proposed",), workers: int = 1, keep_tracks: bool = False,
                dump: dict | None = None) -> MonteCarloResult:
    """Independent seeded runs; results are ordered by run index whatever the worker count.

    ``dump`` optionally names an ``out_dir`` and the stage dumps to write
    (``profiles``, ``maps``, ``volumes``, ``points``), one file set per run.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    seeds = run_seeds(base_seed, runs)
    jobs = [(spec, s, model, tuple(methods), keep_tracks, dump, i) for i, s in enumerate(seeds)]
    if workers > 1 and runs > 1:
        with ProcessPoolExecutor(max_workers=min(workers, runs)) as pool:
            results = list(pool.map(_one_run, jobs))
    else:
        results = [_one_run(j) for j in jobs]
    res = MonteCarloResult(spec.name, seeds)
    for m in methods:
        res.per_run[m] = [r[0][m] for r in results]
        if keep_tracks:
            res.tracks[m] = [r[1][m] for r in results]
    return res

"""Scan-by-scan orchestration of the full processing chain for one run."""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import tracking
from .frontend import MTIFrontend
from .points import Measurement, generate_points
from .scenario import ScenarioSpec
from .synth import EchoModel, RangeProfile, scan_rng, synth_preroll, synth_scan
from .tracking import Associator, TrackPoint, Tracklet, enumerate_tracklets
from .volume import Region, open_regions, region_grow, seed_cells, stack_window
from .voting import (ClutterSuppressor, ScoreMap, VotingGeometry, fuse, threshold_map,
                     votes_from_profile)

STAGES = ("synth", "frontend", "voting", "volume", "points", "tracking", "baseline")


@dataclass
class WindowOutput:
    index: int
    end_scan: int
    regions: list[Region]
    points: dict[int, list[Measurement]]
    tracklets: list[Tracklet]


@dataclass
class RunOutput:
    tracks: list[list[TrackPoint]]
    baseline_tracks: list[list[TrackPoint]]
    timings: dict[str, float]
    windows: int = 0
    raw_trajectories: list = field(default_factory=list)

    def method_time(self, method: str) -> float:
        shared = sum(self.timings[s] for s in ("synth", "frontend", "voting", "volume"))
        if method == "proposed":
            return shared + self.timings["points"] + self.timings["tracking"]
        return shared + self.timings["baseline"]


class Pipeline:
    """Rolling state: MTI histories, the fused-map buffer, clutter density
    history and the trajectory store."""

    def __init__(self, spec: ScenarioSpec, baseline: bool = False, recorder=None):
        p = spec.params
        self.spec = spec
        self.params = p
        self.frontend = MTIFrontend(spec.layout.n_r, p.kappa)
        self.geometry = VotingGeometry(spec.layout, spec.grid, p.n_c, p.sample_period)
        self.maps: deque[ScoreMap] = deque(maxlen=p.window_w)
        self.suppressor = ClutterSuppressor(p.clutter_history_v, p.clutter_floor) if p.clutter_suppression else None
        self.associator = Associator(p.association_radius, p.bridge_gate, p.window_w,
                                     separation=p.new_track_separation)
        self.window_index = 0
        self.baseline = baseline
        self.window_regions: list[tuple[int, list[Region]]] = []
        self.timings = {s: 0.0 for s in STAGES}
        self.recorder = recorder

    def _tick(self, stage: str, since: float) -> float:
        now = time.perf_counter()
        self.timings[stage] += now - since
        return now

    def warm(self, profiles: list[RangeProfile]) -> None:
        self.frontend.warm(profiles)

    def score_map(self, m_profiles: list[RangeProfile], scan: int) -> ScoreMap:
        p = self.params
        per_sensor = []
        for prof in m_profiles:
            try:
                votes = votes_from_profile(prof.samples, p.alpha)
                vals = self.geometry.cell_max(prof.sensor, votes)
            except ZeroDivisionError:
                vals = np.zeros(self.spec.grid.shape)
            per_sensor.append(ScoreMap(vals, scan, "per-sensor"))
        smap = threshold_map(fuse(per_sensor), p.beta)
        if self.suppressor is not None:
            smap = threshold_map(self.suppressor.apply(smap), p.beta)
        return smap

    def step(self, profiles: list[RangeProfile]) -> WindowOutput | None:
        """Advance one scan; returns the window output when a window fires."""
        p = self.params
        scan = profiles[0].scan
        if len(profiles) != self.spec.layout.n_r:
            raise ValueError(f"scan {scan}: expected {self.spec.layout.n_r} profiles, got {len(profiles)}")
        t0 = time.perf_counter()
        m = self.frontend.process(profiles)
        t0 = self._tick("frontend", t0)
        smap = self.score_map(m, scan)
        self.maps.append(smap)
        t0 = self._tick("voting", t0)
        if self.recorder is not None:
            self.recorder.map(smap)
        if scan < p.window_w or (scan - p.window_w) % p.stride_s:
            return None
        try:
            return self._window(t0)
        except Exception as e:
            raise RuntimeError(f"window ending at scan {scan}: {e}") from e

    def _window(self, t0: float) -> WindowOutput:
        p = self.params
        volume = stack_window(list(self.maps), p.window_w)
        gamma = self.maps[-1].threshold if p.gamma_score == "eta" else float(p.gamma_score)
        seeds = seed_cells(volume, *p.seed_spacing)
        regions, cleaned = region_grow(volume, seeds, gamma, p.gamma_num)
        opened_regions, opened = open_regions(regions, cleaned)
        t0 = self._tick("volume", t0)
        if self.recorder is not None:
            self.recorder.volume(self.window_index, opened, opened_regions)
        if self.baseline:
            self.window_regions.append((volume.base_scan, opened_regions))
        pts = generate_points(opened_regions, opened, self.spec.grid, p.smooth_w, p.segment_n,
                              p.measurement_score_floor)
        t0 = self._tick("points", t0)
        if self.recorder is not None:
            self.recorder.points(self.window_index, pts)
        tls = enumerate_tracklets(pts, p.fit_error_floor, p.max_tracklets_per_window,
                                  p.tracklet_relative_threshold, p.max_points_per_scan)
        self.associator.update(self.window_index, tls)
        self._tick("tracking", t0)
        out = WindowOutput(self.window_index, volume.base_scan + p.window_w - 1, opened_regions, pts, tls)
        self.window_index += 1
        return out

    def finish(self) -> tuple[list[list[TrackPoint]], list[list[TrackPoint]]]:
        p = self.params
        t0 = time.perf_counter()
        tracks = [tracking.finalize(t, p.nu, p.window_w, p.fit_error_floor)
                  for t in self.associator.confirmed(p.confirm_windows)]
        t0 = self._tick("tracking", t0)
        base = []
        if self.baseline:
            base = tracking.simple_baseline(self.window_regions, self.spec.grid, p.gating_distance,
                                            p.window_w, max_gap=p.stride_s)
            self._tick("baseline", t0)
        return tracks, base


def synth_stream(spec: ScenarioSpec, seed: int, model: EchoModel | None = None):
    """Yield (scan, profiles) pairs, pre-roll scans (<= 0) first."""
    model = model or spec.echo or EchoModel()
    for scan in range(1 - model.preroll(spec.params.kappa), 1):
        yield scan, synth_preroll(spec, model, scan, scan_rng(seed, scan))
    for scan in range(1, spec.truth.scan_count + 1):
        yield scan, synth_scan(spec, model, scan, scan_rng(seed, scan))


def run(spec: ScenarioSpec, seed: int, model: EchoModel | None = None, baseline: bool = False,
        recorder=None) -> RunOutput:
    """Synthesize and process all K scans of one Monte Carlo run."""
    pipe = Pipeline(spec, baseline=baseline, recorder=recorder)
    stream = synth_stream(spec, seed, model)
    while True:
        t0 = time.perf_counter()
        try:
            scan, profiles = next(stream)
        except StopIteration:
            break
        pipe.timings["synth"] += time.perf_counter() - t0
        if recorder is not None:
            recorder.profiles(profiles)
        if scan <= 0:
            pipe.warm(profiles)
        else:
            pipe.step(profiles)
    tracks, base = pipe.finish()
    return RunOutput(tracks, base, dict(pipe.timings), pipe.window_index, pipe.associator.trajectories)


def replay(spec: ScenarioSpec, stream, baseline: bool = False) -> RunOutput:
    """Process a recorded stream of (scan, profiles) pairs."""
    pipe = Pipeline(spec, baseline=baseline)
    for scan, profiles in stream:
        if scan <= 0:
            pipe.warm(profiles)
        else:
            pipe.step(profiles)
    tracks, base = pipe.finish()
    return RunOutput(tracks, base, dict(pipe.timings), pipe.window_index, pipe.associator.trajectories)

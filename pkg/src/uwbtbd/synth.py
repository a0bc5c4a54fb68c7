"""Envelope-domain range-profile synthesis.

Each profile is the sum of a fixed per-sensor static clutter profile,
Rayleigh background draws, Rician target echoes spread over a few
contiguous bins around the expected delay, and a handful of spurious
non-static clutter bins.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass

import numpy as np

from .scenario import SPEED_OF_LIGHT, ScenarioSpec, SensorLayout, active_targets

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RangeProfile:
    samples: np.ndarray
    scan: int
    sensor: int

    def __post_init__(self):
        if self.samples.ndim != 1:
            raise ValueError("range profile must be one-dimensional")


@dataclass(frozen=True)
class EchoModel:
    # per-pulse Rician line-of-sight amplitude and scatter of target bins
    target_amplitude: float = 0.1
    target_spread: float = 0.02
    background_scale: float = 1.0
    static_clutter_level: float = 5.0
    static_clutter_seed: int = 12345
    target_extent_bins: int = 41
    nonstatic_clutter_rate: float = 2.0
    nonstatic_clutter_amplitude: float = 4.0
    # None: sqrt(N_s) of the scenario parameters
    snr_scale: float | None = None
    detection_probability: float = 1.0
    # clutter-only scans fed to the MTI history before scan 1; None: 3 * kappa
    preroll_scans: int | None = None

    def __post_init__(self):
        if self.target_extent_bins < 1:
            raise ValueError("target_extent_bins must be >= 1")
        vals = [self.target_amplitude, self.target_spread, self.background_scale,
                self.static_clutter_level, self.nonstatic_clutter_rate,
                self.nonstatic_clutter_amplitude]
        if min(vals) < 0 or (self.snr_scale is not None and self.snr_scale < 0):
            raise ValueError("echo model rates and scales must be >= 0")
        if not 0.0 <= self.detection_probability <= 1.0:
            raise ValueError("detection_probability must lie in [0, 1]")

    @classmethod
    def from_dict(cls, raw: dict) -> "EchoModel":
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(raw) - set(known)
        if unknown:
            from .scenario import ScenarioError
            raise ScenarioError(f"echo: unknown field(s) {sorted(unknown)}")
        kw = {}
        for k, v in raw.items():
            if v is None:
                kw[k] = None
            elif k in ("static_clutter_seed", "target_extent_bins", "preroll_scans"):
                kw[k] = int(v)
            else:
                kw[k] = float(v)
        try:
            return cls(**kw)
        except ValueError as e:
            from .scenario import ScenarioError
            raise ScenarioError(f"echo: {e}") from None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def gain(self, n_s: int) -> float:
        return math.sqrt(n_s) if self.snr_scale is None else self.snr_scale

    def preroll(self, kappa: int) -> int:
        return 3 * kappa if self.preroll_scans is None else self.preroll_scans

    def static_clutter_profile(self, sensor: int, n_c: int) -> np.ndarray:
        """Fixed clutter returns for one sensor: a few strong reflectors over a low floor."""
        if self.static_clutter_level == 0:
            return np.zeros(n_c)
        rng = np.random.default_rng([self.static_clutter_seed, sensor])
        prof = 0.2 * self.static_clutter_level * rng.rayleigh(1.0, n_c)
        n_reflectors = max(1, n_c // 100)
        idx = rng.integers(0, n_c, n_reflectors)
        width = 8
        for i, a in zip(idx, self.static_clutter_level * rng.uniform(1.0, 3.0, n_reflectors)):
            lo, hi = max(0, i - width), min(n_c, i + width + 1)
            prof[lo:hi] += a * np.hanning(2 * width + 1)[lo - i + width:hi - i + width]
        return prof


def expected_delay(layout: SensorLayout, sensor: int, target_pos) -> float:
    """Echo delay in seconds seen by ``sensor`` (0-based) for a point target.

    Monostatic: round-trip time. Multistatic: excess delay over the direct
    transmitter-to-sensor path.
    """
    sx, sy = layout.sensors[sensor]
    x, y = target_pos
    d_rx = math.hypot(x - sx, y - sy)
    if layout.mode == "monostatic":
        return 2.0 * d_rx / SPEED_OF_LIGHT
    if layout.transmitter is None:
        raise ValueError("multistatic delay needs a transmitter")
    tx, ty = layout.transmitter
    d_tx = math.hypot(x - tx, y - ty)
    return (d_tx + d_rx - layout.baseline_lengths[sensor]) / SPEED_OF_LIGHT


def scan_rng(seed: int, scan: int) -> np.random.Generator:
    """Independent generator for one (run, scan); pre-roll scans are <= 0."""
    return np.random.default_rng([seed, scan + 1_000_000])


def _background(spec: ScenarioSpec, model: EchoModel, sensor: int, rng) -> np.ndarray:
    n_c = spec.params.n_c
    prof = model.static_clutter_profile(sensor, n_c)
    if model.background_scale > 0:
        prof = prof + rng.rayleigh(model.background_scale, n_c)
    else:
        prof = prof.copy()
    n_spur = rng.poisson(model.nonstatic_clutter_rate) if model.nonstatic_clutter_rate > 0 else 0
    if n_spur:
        idx = rng.integers(0, n_c, n_spur)
        prof[idx] += rng.rayleigh(model.nonstatic_clutter_amplitude, n_spur)
    return prof


def synth_scan(spec: ScenarioSpec, model: EchoModel, scan: int, rng: np.random.Generator) -> list[RangeProfile]:
    """One envelope profile per sensor for ``scan`` (1-based)."""
    if not 1 <= scan <= spec.truth.scan_count:
        raise IndexError(f"scan {scan} outside [1, {spec.truth.scan_count}]")
    p = spec.params
    targets = active_targets(spec.truth, scan)
    gain = model.gain(p.n_s)
    ext = model.target_extent_bins
    out = []
    for n in range(spec.layout.n_r):
        prof = _background(spec, model, n, rng)
        for tid, pos in targets.items():
            if model.detection_probability < 1.0 and rng.random() >= model.detection_probability:
                continue
            b0 = int(round(expected_delay(spec.layout, n, pos) / p.sample_period))
            lo = b0 - ext // 2
            hi = lo + ext
            if hi <= 0 or lo >= p.n_c:
                log.debug("target %d beyond the range of sensor %d at scan %d", tid, n, scan)
                continue
            lo_c, hi_c = max(lo, 0), min(hi, p.n_c)
            nu = model.target_amplitude * gain
            sigma = model.target_spread * gain
            k = hi_c - lo_c
            # Rician envelope: |nu + complex Gaussian|
            echo = np.abs(nu + sigma * (rng.standard_normal(k) + 1j * rng.standard_normal(k)))
            prof[lo_c:hi_c] += echo
        out.append(RangeProfile(prof, scan, n))
    return out


def synth_preroll(spec: ScenarioSpec, model: EchoModel, scan: int, rng: np.random.Generator) -> list[RangeProfile]:
    """Target-free profiles for warm-up scans (``scan`` <= 0)."""
    return [RangeProfile(_background(spec, model, n, rng), scan, n) for n in range(spec.layout.n_r)]

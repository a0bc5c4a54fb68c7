"""In-sensor MTI clutter removal."""
from __future__ import annotations

from collections import deque

import numpy as np

from .synth import RangeProfile


class WarmupError(RuntimeError):
    """Not enough lagged history to form the MTI reference."""


class ProfileHistory:
    """Ring buffer of the last 3*kappa profiles of one sensor."""

    def __init__(self, kappa: int):
        if kappa < 1:
            raise ValueError("kappa must be >= 1")
        self.kappa = kappa
        self._buf: deque[tuple[int, np.ndarray]] = deque(maxlen=3 * kappa)

    def __len__(self):
        return len(self._buf)

    def push(self, profile: RangeProfile) -> None:
        if self._buf and profile.scan <= self._buf[-1][0]:
            raise ValueError("profiles must be pushed in increasing scan order")
        self._buf.append((profile.scan, np.asarray(profile.samples, dtype=float)))

    def scans(self) -> list[int]:
        return [s for s, _ in self._buf]

    def get(self, scans) -> list[np.ndarray]:
        want = set(scans)
        return [v for s, v in self._buf if s in want]


def _mean(profiles) -> np.ndarray:
    """Elementwise mean, taken as offsets from the first profile so that a
    constant sequence reproduces its value bit for bit."""
    base = profiles[0]
    return base + np.mean(np.asarray(profiles) - base, axis=0)


def mti_reference(history: ProfileHistory, t: int) -> np.ndarray:
    """Mean of the profiles at scans t-kappa-p, p = 1..2*kappa."""
    k = history.kappa
    lagged = range(t - 3 * k, t - k)
    found = history.get(lagged)
    if len(found) < 2 * k:
        raise WarmupError(f"scan {t}: {len(found)} of {2 * k} lagged profiles available")
    return _mean(found)


def warmup_reference(history: ProfileHistory, t: int) -> np.ndarray | None:
    """MTI reference that tolerates a short history.

    Uses whichever properly lagged scans exist; failing that, the oldest
    earlier scan. Returns None when no earlier scan exists at all.
    """
    try:
        return mti_reference(history, t)
    except WarmupError:
        pass
    k = history.kappa
    found = history.get(range(t - 3 * k, t - k))
    if found:
        return _mean(found)
    earlier = [s for s in history.scans() if s < t]
    if not earlier:
        return None
    return history.get([earlier[0]])[0]


def mti_subtract(current: RangeProfile, reference) -> RangeProfile:
    ref = reference.samples if isinstance(reference, RangeProfile) else np.asarray(reference, dtype=float)
    cur = np.asarray(current.samples, dtype=float)
    if cur.shape != ref.shape:
        raise ValueError(f"profile length mismatch: {cur.shape[0]} vs {ref.shape[0]}")
    return RangeProfile(np.abs(cur - ref), current.scan, current.sensor)


class MTIFrontend:
    """Per-sensor MTI over a stream of scans."""

    def __init__(self, n_sensors: int, kappa: int):
        self.histories = [ProfileHistory(kappa) for _ in range(n_sensors)]

    def warm(self, profiles: list[RangeProfile]) -> None:
        """Feed pre-roll profiles into the history without producing output."""
        for prof in profiles:
            self.histories[prof.sensor].push(prof)

    def process(self, profiles: list[RangeProfile]) -> list[RangeProfile]:
        out = []
        for prof in profiles:
            hist = self.histories[prof.sensor]
            ref = warmup_reference(hist, prof.scan)
            if ref is None:
                m = RangeProfile(np.zeros_like(prof.samples, dtype=float), prof.scan, prof.sensor)
            else:
                m = mti_subtract(prof, ref)
            hist.push(prof)
            out.append(m)
        return out

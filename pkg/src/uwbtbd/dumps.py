"""On-disk artifacts: stage dumps for debugging and figure data, plus result tables.

Every file is written through a temporary sibling and renamed into place, so
an interrupted run never leaves a truncated artifact behind.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .synth import RangeProfile
from .voting import ScoreMap

PROFILE_TAG = b"PROFILE"
MAP_TAG = b"MAP"


def atomic_write(path, data) -> Path:
    """Write ``data`` (str or bytes) to ``path`` via temp file + rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, (bytes, bytearray)) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": "", "encoding": "utf-8"})) as fh:
            fh.write(data)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


class AtomicStream:
    """Binary or text file assembled incrementally and renamed on ``close``."""

    def __init__(self, path, binary: bool = True):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, self.tmp = tempfile.mkstemp(dir=self.path.parent, prefix=f".{self.path.name}.", suffix=".tmp")
        self.fh = os.fdopen(fd, "wb" if binary else "w", **({} if binary else {"encoding": "utf-8"}))

    def write(self, data) -> None:
        self.fh.write(data)

    def close(self) -> Path:
        self.fh.close()
        os.chmod(self.tmp, 0o644)
        os.replace(self.tmp, self.path)
        return self.path

    def abort(self) -> None:
        self.fh.close()
        if os.path.exists(self.tmp):
            os.unlink(self.tmp)


def _header(tag: bytes, **fields) -> bytes:
    return tag + b" " + " ".join(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}"
                                 for k, v in fields.items()).encode() + b"\n"


def _parse_header(line: bytes) -> tuple[bytes, dict[str, str]]:
    tag, *rest = line.rstrip(b"\n").split(b" ")
    return tag, dict(item.decode().split("=", 1) for item in rest)


# -- range profiles ---------------------------------------------------------

def encode_profile(profile: RangeProfile, sample_period: float, run: int = 0) -> bytes:
    samples = np.asarray(profile.samples, dtype="<f8")
    head = _header(PROFILE_TAG, n_c=len(samples), t_s=float(sample_period), sensor=profile.sensor,
                   scan=profile.scan, run=run)
    return head + samples.tobytes()


def read_profiles(path) -> list[tuple[dict, RangeProfile]]:
    """All records of a profile dump as (header fields, profile) pairs."""
    out = []
    with open(path, "rb") as fh:
        while True:
            line = fh.readline()
            if not line:
                break
            tag, h = _parse_header(line)
            if tag != PROFILE_TAG:
                raise ValueError(f"{path}: unexpected record tag {tag!r}")
            n_c = int(h["n_c"])
            raw = fh.read(8 * n_c)
            if len(raw) != 8 * n_c:
                raise ValueError(f"{path}: truncated profile record")
            samples = np.frombuffer(raw, dtype="<f8").astype(float)
            out.append((h, RangeProfile(samples, int(h["scan"]), int(h["sensor"]))))
    return out


def profile_stream(path):
    """Group a profile dump into (scan, profiles) pairs in file order, ready for replay."""
    groups: dict[int, list[RangeProfile]] = {}
    order = []
    for _, prof in read_profiles(path):
        if prof.scan not in groups:
            groups[prof.scan] = []
            order.append(prof.scan)
        groups[prof.scan].append(prof)
    for scan in order:
        yield scan, sorted(groups[scan], key=lambda p: p.sensor)


# -- score maps -------------------------------------------------------------

def encode_map(smap: ScoreMap) -> bytes:
    vals = np.ascontiguousarray(smap.values, dtype="<f8")
    thr = "none" if smap.threshold is None else repr(float(smap.threshold))
    head = _header(MAP_TAG, n_x=vals.shape[0], n_y=vals.shape[1], scan=smap.scan, kind=smap.kind, threshold=thr)
    return head + vals.tobytes()


def read_maps(path) -> list[ScoreMap]:
    out = []
    with open(path, "rb") as fh:
        while True:
            line = fh.readline()
            if not line:
                break
            tag, h = _parse_header(line)
            if tag != MAP_TAG:
                raise ValueError(f"{path}: unexpected record tag {tag!r}")
            n_x, n_y = int(h["n_x"]), int(h["n_y"])
            raw = fh.read(8 * n_x * n_y)
            if len(raw) != 8 * n_x * n_y:
                raise ValueError(f"{path}: truncated map record")
            vals = np.frombuffer(raw, dtype="<f8").reshape(n_x, n_y).astype(float)
            thr = None if h["threshold"] == "none" else float(h["threshold"])
            out.append(ScoreMap(vals, int(h["scan"]), h["kind"], thr))
    return out


# -- delimited tables -------------------------------------------------------

def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def volume_rows(window: int, volume, regions):
    """Sparse records (window, i_x, i_y, scan, score, region_id) of the nonzero cells."""
    rid = np.zeros(volume.values.shape, dtype=np.int32)
    for r in regions:
        rid[tuple(r.cells.T)] = r.id
    for ix, iy, k in np.argwhere(volume.values > 0):
        yield (window, ix + 1, iy + 1, volume.base_scan + k, repr(float(volume.values[ix, iy, k])),
               int(rid[ix, iy, k]))


def trajectory_rows(run_index: int, tracks):
    for tid, tr in enumerate(tracks, start=1):
        for p in tr:
            yield (run_index, tid, p.scan, _fmt(p.x), _fmt(p.y), int(p.smoothed))


TRAJECTORY_HEADER = ("run", "track_id", "scan", "x", "y", "smoothed")


def write_trajectories(path, per_run_tracks) -> Path:
    rows = [r for i, tracks in enumerate(per_run_tracks) for r in trajectory_rows(i, tracks)]
    return atomic_write(path, _csv_text(TRAJECTORY_HEADER, rows))


def read_trajectories(path) -> dict[int, list[list[tuple[int, float, float]]]]:
    """run -> list of tracks, each a list of (scan, x, y)."""
    runs: dict[int, dict[int, list]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            runs.setdefault(int(row["run"]), {}).setdefault(int(row["track_id"]), []).append(
                (int(row["scan"]), float(row["x"]), float(row["y"])))
    return {r: [tr[k] for k in sorted(tr)] for r, tr in runs.items()}


def write_ospa_series(path, series: dict[str, np.ndarray]) -> Path:
    methods = list(series)
    n = len(next(iter(series.values()))) if series else 0
    rows = [(k + 1, *(_fmt(series[m][k]) for m in methods)) for k in range(n)]
    return atomic_write(path, _csv_text(("scan", *methods), rows))


def write_json(path, doc) -> Path:
    return atomic_write(path, json.dumps(doc, indent=2, sort_keys=False) + "\n")


# -- per-run recorder -------------------------------------------------------

class Recorder:
    """Pipeline hook target streaming the enabled stage dumps of one run."""

    def __init__(self, out_dir, run_index: int, sample_period: float, profiles: bool = False,
                 maps: bool = False, volumes: bool = False, points: bool = False):
        self.out_dir = Path(out_dir)
        self.run_index = run_index
        self.sample_period = sample_period
        self._streams: dict[str, AtomicStream] = {}
        tag = f"run{run_index:04d}"
        if profiles:
            self._streams["profiles"] = AtomicStream(self.out_dir / f"profiles_{tag}.bin")
        if maps:
            self._streams["maps"] = AtomicStream(self.out_dir / f"maps_{tag}.bin")
        if volumes:
            s = AtomicStream(self.out_dir / f"volumes_{tag}.csv", binary=False)
            s.write("window,i_x,i_y,scan,score,region_id\n")
            self._streams["volumes"] = s
        if points:
            s = AtomicStream(self.out_dir / f"points_{tag}.csv", binary=False)
            s.write("run,window,region,scan,x,y,p\n")
            self._streams["points"] = s

    def profiles(self, profiles: list[RangeProfile]) -> None:
        s = self._streams.get("profiles")
        if s is not None:
            for prof in profiles:
                s.write(encode_profile(prof, self.sample_period, self.run_index))

    def map(self, smap: ScoreMap) -> None:
        s = self._streams.get("maps")
        if s is not None:
            s.write(encode_map(smap))

    def volume(self, window: int, volume, regions) -> None:
        s = self._streams.get("volumes")
        if s is not None:
            s.write("".join(",".join(str(v) for v in row) + "\n" for row in volume_rows(window, volume, regions)))

    def points(self, window: int, pts) -> None:
        s = self._streams.get("points")
        if s is not None:
            for scan in sorted(pts):
                for z in pts[scan]:
                    s.write(f"{self.run_index},{window},{z.region},{scan},{_fmt(z.x)},{_fmt(z.y)},{z.score!r}\n")

    def close(self) -> list[Path]:
        return [s.close() for s in self._streams.values()]

    def abort(self) -> None:
        for s in self._streams.values():
            s.abort()

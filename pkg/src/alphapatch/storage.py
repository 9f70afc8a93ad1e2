"""Snapshots, sidecars and time series on disk.

A snapshot is ``<stem>.csv`` with rows ``contour_id,node_index,x,y`` plus
``<stem>.json`` holding the metadata needed to rebuild the system. Numbers
are written with 17 significant digits, which round-trips doubles exactly.
Every file is written to a temporary name in the same directory and then
renamed into place.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .diagnostics import DiagnosticsRecord
from .evolution import PatchSystem
from .geometry import Contour
from .kernel import KernelParams

SNAPSHOT_HEADER = ("contour_id", "node_index", "x", "y")
SERIES_HEADER = ("step", "t", "tau", "min_distance", "max_curvature",
                 "area_1", "area_2", "n1", "n2", "dt")
SCHEMA_VERSION = 1


class SchemaError(ValueError):
    pass


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(x: float) -> str:
    return "%.17g" % x


def _paths(path) -> tuple[Path, Path]:
    path = Path(path)
    stem = path.with_suffix("") if path.suffix in (".csv", ".json") else path
    return stem.with_suffix(".csv"), stem.with_suffix(".json")


def write_snapshot(path, system: PatchSystem, *, step: int = 0, config_hash: str | None = None,
                   extra: dict | None = None) -> Path:
    """Write ``system`` as CSV plus JSON sidecar; returns the CSV path."""
    csv_path, meta_path = _paths(path)
    buf = io.StringIO()
    buf.write(",".join(SNAPSHOT_HEADER) + "\n")
    for c in system.contours:
        for j, (x, y) in enumerate(c.nodes):
            buf.write(f"{c.id},{j},{fmt(x)},{fmt(y)}\n")
    time_key = "t" if system.mode == "physical" else "tau"
    meta = {
        "schema": SCHEMA_VERSION,
        "alpha": system.alpha,
        "mode": system.mode,
        time_key: system.time,
        "step": step,
        "contour_ids": [c.id for c in system.contours],
        "theta": [c.strength for c in system.contours],
        "node_counts": list(system.node_counts),
        "kernel": asdict(system.kernel),
        "config_hash": config_hash,
    }
    if extra:
        meta.update(extra)
    # data first: a sidecar never points at a missing or partial CSV
    atomic_write(csv_path, buf.getvalue())
    atomic_write(meta_path, json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return csv_path


def read_metadata(path) -> dict:
    _, meta_path = _paths(path)
    if not meta_path.exists():
        raise SchemaError(f"missing sidecar {meta_path}")
    return json.loads(meta_path.read_text())


def read_snapshot(path) -> PatchSystem:
    csv_path, _ = _paths(path)
    meta = read_metadata(path)
    for key in ("alpha", "mode", "theta", "node_counts", "contour_ids"):
        if key not in meta:
            raise SchemaError(f"sidecar lacks {key!r}")
    time_key = "t" if meta["mode"] == "physical" else "tau"
    if time_key not in meta:
        raise SchemaError(f"sidecar for mode {meta['mode']} lacks {time_key!r}")
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != SNAPSHOT_HEADER:
            raise SchemaError(f"bad snapshot header {header}")
        rows = [r for r in reader if r]
    try:
        ids = np.array([int(r[0]) for r in rows])
        idx = np.array([int(r[1]) for r in rows])
        xy = np.array([[float(r[2]), float(r[3])] for r in rows])
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"malformed snapshot row: {exc}") from None
    contours = []
    for cid, theta, n in zip(meta["contour_ids"], meta["theta"], meta["node_counts"]):
        sel = ids == cid
        if sel.sum() != n or not np.array_equal(idx[sel], np.arange(n)):
            raise SchemaError(f"contour {cid}: node rows do not match the sidecar count {n}")
        contours.append(Contour(xy[sel], float(theta), int(cid)))
    kernel = KernelParams(**meta["kernel"]) if "kernel" in meta else KernelParams()
    return PatchSystem(tuple(contours), float(meta["alpha"]), meta["mode"],
                       float(meta[time_key]), kernel)


def record_row(rec: DiagnosticsRecord) -> list[str]:
    areas = list(rec.areas) + [math.nan] * (2 - len(rec.areas))
    counts = list(rec.node_counts) + [0] * (2 - len(rec.node_counts))
    return [str(rec.step), fmt(rec.t), fmt(rec.tau), fmt(rec.min_distance), fmt(rec.max_curvature),
            fmt(areas[0]), fmt(areas[1]), str(counts[0]), str(counts[1]), fmt(rec.dt)]


class SeriesWriter:
    """Accumulates diagnostics rows and rewrites the CSV atomically on flush."""

    def __init__(self, path, rows: list[list[str]] | None = None):
        self.path = Path(path)
        self.rows = list(rows or [])

    @classmethod
    def resume(cls, path, upto_step: int) -> "SeriesWriter":
        """Existing series truncated to rows with ``step <= upto_step``."""
        rows = []
        if Path(path).exists():
            with open(path, newline="") as fh:
                reader = csv.reader(fh)
                if tuple(next(reader, ())) != SERIES_HEADER:
                    raise SchemaError(f"bad series header in {path}")
                rows = [r for r in reader if r and int(r[0]) <= upto_step]
        return cls(path, rows)

    def append(self, rec: DiagnosticsRecord) -> None:
        self.rows.append(record_row(rec))

    def flush(self) -> None:
        text = ",".join(SERIES_HEADER) + "\n" + "".join(",".join(r) + "\n" for r in self.rows)
        atomic_write(self.path, text)


def read_series(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != SERIES_HEADER:
            raise SchemaError(f"bad series header {header}")
        rows = [r for r in reader if r]
    cols = list(zip(*rows)) if rows else [()] * len(SERIES_HEADER)
    out = {}
    for name, col in zip(SERIES_HEADER, cols):
        dtype = int if name in ("step", "n1", "n2") else float
        out[name] = np.array([dtype(v) for v in col], dtype=dtype)
    return out

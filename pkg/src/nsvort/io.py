"""Bit-stable output files: norms.csv, JSON reports and field snapshots.

A snapshot is a pair ``<stem>.json`` (metadata) and ``<stem>.bin`` holding
float64 little-endian physical samples, shape (components, n, ..., n),
row-major with the last axis fastest.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .grid import GridSpec, SpectralField, to_physical

NORM_COLUMNS = ("t", "lp", "grad_lp", "weighted_lp", "weighted_grad_lp", "l_crit", "eta_t", "a", "c", "m")


def _fmt(v: float) -> str:
    return "%.17g" % v


def write_norms_csv(path: Path, columns: dict[str, np.ndarray]) -> None:
    rows = zip(*(np.asarray(columns[c], dtype=np.float64) for c in NORM_COLUMNS))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(NORM_COLUMNS)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_norms_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.DictReader(fh)
        data = list(r)
    return {c: np.array([float(row[c]) for row in data]) for c in NORM_COLUMNS}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        # JSON has no infinities; keep them readable
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_snapshot(directory: Path, stem: str, f: SpectralField, t: float, kind: str) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    samples = to_physical(f, check=False)
    meta = {
        "d": f.grid.d,
        "n": f.grid.n,
        "L": f.grid.L,
        "t": float(t),
        "kind": kind,
        "component_count": f.components,
    }
    write_json(directory / f"{stem}.json", meta)
    np.ascontiguousarray(samples, dtype="<f8").tofile(directory / f"{stem}.bin")
    return directory / f"{stem}.json"


def read_snapshot(json_path: Path) -> tuple[dict, np.ndarray]:
    json_path = Path(json_path)
    meta = json.loads(json_path.read_text(encoding="utf-8"))
    shape = (meta["component_count"],) + (meta["n"],) * meta["d"]
    data = np.fromfile(json_path.with_suffix(".bin"), dtype="<f8").reshape(shape)
    return meta, data


def load_field(json_path: Path, grid: GridSpec) -> np.ndarray:
    """Samples of a snapshot, checked against ``grid``."""
    meta, data = read_snapshot(json_path)
    if (meta["d"], meta["n"], float(meta["L"])) != (grid.d, grid.n, grid.L):
        raise ValueError(f"snapshot grid (d={meta['d']}, n={meta['n']}, L={meta['L']}) does not match the run grid")
    return data

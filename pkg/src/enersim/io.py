"""Deterministic file writers: CSV, binary PPM, JSON, run manifests."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np


def fmt(value) -> str:
    """Reals with 17 significant digits; integers as integers; strings verbatim."""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return f"{float(value):.17g}"


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def write_time_series(path, times, values, columns) -> Path:
    """One row per time slice: ``time, values[n, 0], values[n, 1], ...``."""
    header = ["time"] + [fmt(c) for c in columns]
    return write_csv(path, header, (np.concatenate(([t], row)) for t, row in zip(times, values)))


def write_ppm(path, rgb: np.ndarray) -> Path:
    """Binary P6 image from an ``(H, W, 3)`` uint8 array."""
    path = Path(path)
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    height, width, _ = rgb.shape
    with path.open("wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())
    return path


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM")
    width, height = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(height, width, 3)


def write_json(path, doc) -> Path:
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, subcommand: str, config: dict, seed, version: str, outputs, summary=None) -> Path:
    """``run.json``: resolved config plus a digest of every emitted file."""
    doc = {
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "version": version,
        "outputs": [{"path": Path(p).name, "sha256": sha256(p)} for p in outputs],
    }
    if summary is not None:
        doc["summary"] = summary
    return write_json(path, doc)

"""File formats: 16-bit PGM images, image CSV tables and run manifests."""
from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np


def to_raster(image: np.ndarray) -> np.ndarray:
    """Turn an [ix, iy] array into display rows: top row is the largest y."""
    return np.asarray(image).T[::-1]


def pgm_bytes(image: np.ndarray) -> bytes:
    """Binary P5 PGM, maxval 65535, big-endian; values in [0, 1] map linearly.

    ``image`` is indexed [ix, iy] like every grid array in the package.
    """
    raster = to_raster(image)
    if raster.ndim != 2:
        raise ValueError("image must be 2-D")
    scaled = np.rint(np.clip(raster, 0.0, 1.0) * 65535.0).astype(">u2")
    height, width = scaled.shape
    return f"P5\n{width} {height}\n65535\n".encode("ascii") + scaled.tobytes()


def write_pgm(path, image: np.ndarray) -> Path:
    path = Path(path)
    path.write_bytes(pgm_bytes(image))
    return path


def read_pgm(path) -> np.ndarray:
    """Read a 16-bit P5 file back into an [ix, iy] array of floats in [0, 1]."""
    data = Path(path).read_bytes()
    fields = []
    pos = 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace before the raster
    if fields[0] != b"P5" or int(fields[3]) != 65535:
        raise ValueError("not a 16-bit binary PGM")
    width, height = int(fields[1]), int(fields[2])
    raster = np.frombuffer(data, dtype=">u2", count=width * height, offset=pos).reshape(height, width)
    return raster[::-1].T.astype(float) / 65535.0


def image_csv(image: np.ndarray, axis_mm: np.ndarray) -> str:
    """``x_mm,y_mm,rate`` rows, x outer and y inner (row-major over [ix, iy])."""
    out = io.StringIO()
    out.write("x_mm,y_mm,rate\n")
    for ix, x in enumerate(axis_mm):
        for iy, y in enumerate(axis_mm):
            out.write(f"{x:.17g},{y:.17g},{image[ix, iy]:.17g}\n")
    return out.getvalue()


def write_text(path, text: str) -> Path:
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def write_manifest(path, manifest: dict) -> Path:
    return write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")

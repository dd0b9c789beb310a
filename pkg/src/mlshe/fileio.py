"""Binary and CSV serialization of noise fields and trajectories.

Binary layout (all little-endian), header of 96 bytes followed by the payload::

    offset  size  type      field
    0       8     char[8]   magic b"MLSHEBIN"
    8       4     uint32    format version (1)
    12      4     uint32    kind: 1 = noise field, 2 = field trajectory
    16      8     float64   x_min
    24      8     float64   x_max
    32      8     float64   t_max
    40      8     uint64    nx
    48      8     uint64    nt
    56      4     uint32    boundary: 0 = periodic, 1 = absorbing
    60      4     uint32    reserved (0)
    64      8     uint64    seed
    72      8     uint64    payload rows
    80      8     uint64    payload columns
    88      8     float64   init location x0 (NaN when not a delta start)
    96      ...   float64   payload, row-major (rows x columns)

Noise payloads have ``nt`` rows of unit normals; trajectory payloads have
``nt + 1`` rows of field values.
"""
from __future__ import annotations

import csv
import math
import struct
from pathlib import Path

import numpy as np

from .errors import GridError
from .noise import GridSpec, NoiseField

MAGIC = b"MLSHEBIN"
VERSION = 1
KIND_NOISE = 1
KIND_TRAJECTORY = 2
_HEADER = struct.Struct("<8sII3dQQIIQQQd")
_BOUNDARY_CODE = {"periodic": 0, "absorbing": 1}
_BOUNDARY_NAME = {v: k for k, v in _BOUNDARY_CODE.items()}

assert _HEADER.size == 96


def write_binary(path, grid: GridSpec, payload: np.ndarray, kind: int, seed: int = 0, x0: float = math.nan):
    payload = np.ascontiguousarray(payload, dtype="<f8")
    rows, cols = payload.shape
    header = _HEADER.pack(
        MAGIC, VERSION, kind, grid.x_min, grid.x_max, grid.t_max, grid.nx, grid.nt,
        _BOUNDARY_CODE[grid.boundary], 0, int(seed), rows, cols, float(x0),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes(order="C"))


def read_binary(path):
    """Return ``(kind, grid, seed, x0, payload)`` from a binary file."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise GridError("file too short for header")
    (magic, version, kind, x_min, x_max, t_max, nx, nt, bcode, _r, seed, rows, cols, x0) = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise GridError("bad magic; not an mlshe binary file")
    if version != VERSION:
        raise GridError(f"unsupported format version {version}")
    grid = GridSpec(x_min, x_max, nx, t_max, nt, _BOUNDARY_NAME[bcode])
    payload = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if payload.size != rows * cols:
        raise GridError("payload size does not match header")
    return kind, grid, seed, x0, payload.reshape(rows, cols).astype(np.float64)


def save_noise(noise: NoiseField, path):
    write_binary(path, noise.grid, noise.xi, KIND_NOISE, noise.seed)


def load_noise(path) -> NoiseField:
    kind, grid, seed, _x0, payload = read_binary(path)
    if kind != KIND_NOISE:
        raise GridError("file does not hold a noise field")
    return NoiseField(grid, payload, seed)


def write_csv(path, header, rows):
    """Write rows under a header line; floats use ``repr`` so files round-trip exactly."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def read_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]

"""Explicit lattice solver for the multiplicative stochastic heat equation

    du = (1/2) u_xx dt + u W(dt, dx).

One time step reads

    u_{m+1, i} = sum_j P(i, j) u_{m, j} dx + u_{m, i} xi[m, i] sqrt(dt/dx),

where ``P(i, j) dx`` is the one-step lattice heat kernel with weights
``lam/2, 1 - lam, lam/2`` on the nearest neighbours (``lam = dt/dx^2``).  The
step matrix has the exact variance ``dt`` and is nonnegative whenever
``dt <= dx^2/2``; its row sums are one, so mass is conserved without noise.
The noise multiplies the current value at the same node (Ito coupling).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridError
from .fileio import KIND_TRAJECTORY, read_binary, write_binary, write_csv
from .noise import GridSpec, NoiseField, noise_rows

__all__ = [
    "FieldTrajectory",
    "delta_init",
    "discretize_init",
    "heat_step",
    "solve_she",
    "solve_family",
    "family_snapshots",
    "ensemble_snapshots",
    "order_violation_cells",
]


def heat_step(u: np.ndarray, lam: float, boundary: str) -> np.ndarray:
    """Apply the lattice heat step along the last axis."""
    if boundary == "periodic":
        left = np.roll(u, 1, axis=-1)
        right = np.roll(u, -1, axis=-1)
    else:
        left = np.zeros_like(u)
        right = np.zeros_like(u)
        left[..., 1:] = u[..., :-1]
        right[..., :-1] = u[..., 1:]
    return (1.0 - lam) * u + 0.5 * lam * (left + right)


def delta_init(grid: GridSpec, x0: float) -> np.ndarray:
    """Mass ``1/dx`` at the node nearest to ``x0``."""
    u = np.zeros(grid.nx)
    u[grid.node_index(x0)] = 1.0 / grid.dx
    return u


def discretize_init(grid: GridSpec, init):
    """Return ``(values, descriptor)`` for the supported initial data.

    ``init`` is ``("delta", x0)``, a callable of the node positions, or an
    array of node values.
    """
    if isinstance(init, tuple) and len(init) == 2 and init[0] == "delta":
        return delta_init(grid, float(init[1])), ("delta", float(init[1]))
    if callable(init):
        vals = np.asarray(init(grid.x), dtype=float)
        vals = np.broadcast_to(vals, (grid.nx,)).copy()
        return vals, ("function", None)
    vals = np.asarray(init, dtype=float)
    if vals.shape != (grid.nx,):
        raise GridError(f"initial data has shape {vals.shape}, expected ({grid.nx},)")
    return vals.copy(), ("function", None)


@dataclass(eq=False)
class FieldTrajectory:
    """Values ``u(t_m, x_i)`` for ``m = 0..nt``; row 0 is the initial data."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)
    init: tuple = ("function", None)

    def __post_init__(self):
        if self.values.shape != (self.grid.nt + 1, self.grid.nx):
            raise GridError("trajectory shape does not match its grid")

    @property
    def x0(self):
        return self.init[1] if self.init[0] == "delta" else None

    def at(self, t: float) -> np.ndarray:
        return self.values[self.grid.time_index(t)]

    def value(self, t: float, y, interpolate: bool = False):
        """Field value at grid time ``t`` and position(s) ``y``."""
        row = self.at(t)
        y = np.asarray(y, dtype=float)
        if interpolate:
            return np.interp(y, self.grid.x, row)
        r = (y - self.grid.x_min) / self.grid.dx
        k = np.rint(r).astype(int)
        if np.any(np.abs(r - k) > 1e-9 * np.maximum(1.0, np.abs(r))) or np.any((k < 0) | (k >= self.grid.nx)):
            raise GridError("y is not on the grid; pass interpolate=True")
        return row[k]

    def to_binary(self, path):
        x0 = self.x0 if self.x0 is not None else math.nan
        write_binary(path, self.grid, self.values, KIND_TRAJECTORY, 0, x0)

    @classmethod
    def from_binary(cls, path) -> "FieldTrajectory":
        kind, grid, _seed, x0, payload = read_binary(path)
        if kind != KIND_TRAJECTORY:
            raise GridError("file does not hold a trajectory")
        init = ("function", None) if math.isnan(x0) else ("delta", x0)
        return cls(grid, payload, init)

    def to_csv(self, path, times=None):
        """CSV slices with columns ``t, x, u``."""
        times = self.grid.times if times is None else times
        rows = []
        for t in times:
            row = self.at(t)
            rows.extend((float(t), float(xv), float(v)) for xv, v in zip(self.grid.x, row))
        write_csv(path, ["t", "x", "u"], rows)


def _check(grid: GridSpec, noise: NoiseField):
    grid.require_stable()
    if noise.grid != grid:
        raise GridError("noise grid differs from the solver grid")


def _evolve(u0: np.ndarray, grid: GridSpec, xi: np.ndarray, keep_rows=None):
    """Advance a batch ``u0`` of shape (B, nx).

    ``xi`` has shape (nt, nx) (shared noise) or (B, nt, nx) (one field per
    batch member).  Returns the stack of kept rows, shape (B, len(keep), nx).
    """
    lam = grid.dt / grid.dx**2
    s = math.sqrt(grid.dt / grid.dx)
    keep = np.arange(grid.nt + 1) if keep_rows is None else np.asarray(keep_rows)
    slot = {int(m): k for k, m in enumerate(keep)}
    out = np.empty((u0.shape[0], keep.size, grid.nx))
    u = u0.astype(float, copy=True)
    if 0 in slot:
        out[:, slot[0]] = u
    shared = xi.ndim == 2
    last = int(keep.max()) if keep.size else 0
    for m in range(last):
        row = xi[m] if shared else xi[:, m]
        u = heat_step(u, lam, grid.boundary) + u * row * s
        if m + 1 in slot:
            out[:, slot[m + 1]] = u
    return out


def solve_she(grid: GridSpec, noise: NoiseField, init) -> FieldTrajectory:
    """Solve from ``init`` (see :func:`discretize_init`) with the given noise."""
    _check(grid, noise)
    u0, desc = discretize_init(grid, init)
    vals = _evolve(u0[None, :], grid, noise.xi)[0]
    return FieldTrajectory(grid, vals, desc)


def solve_family(grid: GridSpec, noise: NoiseField, x0s) -> list:
    """Delta-initial-data trajectories for each ``x0``, all driven by ``noise``."""
    _check(grid, noise)
    x0s = [float(a) for a in x0s]
    u0 = np.stack([delta_init(grid, a) for a in x0s])
    vals = _evolve(u0, grid, noise.xi)
    return [FieldTrajectory(grid, vals[k], ("delta", a)) for k, a in enumerate(x0s)]


def family_snapshots(grid: GridSpec, noise: NoiseField, x0s, times) -> np.ndarray:
    """``u(t, x0_k, x_i)`` as an array (len(x0s), len(times), nx) without storing trajectories."""
    _check(grid, noise)
    u0 = np.stack([delta_init(grid, float(a)) for a in x0s])
    rows = [grid.time_index(t) for t in times]
    return _evolve(u0, grid, noise.xi, rows)


def ensemble_snapshots(grid: GridSpec, seeds, init, times, chunk: int = 32) -> np.ndarray:
    """Independent solutions, one per seed, at the requested grid times.

    Noise for seed ``s`` is ``sample_noise(grid, s)``, so each member equals
    :func:`solve_she` with that noise bit for bit.  Returns an array of shape
    (len(seeds), len(times), nx).
    """
    grid.require_stable()
    u0, _ = discretize_init(grid, init)
    rows = [grid.time_index(t) for t in times]
    seeds = list(seeds)
    out = np.empty((len(seeds), len(rows), grid.nx))
    last = max(rows) if rows else 0
    for start in range(0, len(seeds), chunk):
        batch = seeds[start : start + chunk]
        xi = np.stack([noise_rows(s, grid.nx, 0, max(last, 1)) for s in batch])
        if last < grid.nt:
            pad = np.zeros((len(batch), grid.nt - xi.shape[1], grid.nx))
            xi = np.concatenate([xi, pad], axis=1)
        out[start : start + len(batch)] = _evolve(np.tile(u0, (len(batch), 1)), grid, xi, rows)
    return out


def order_violation_cells(grid: GridSpec, noise: NoiseField, t: float | None = None) -> int:
    """Cells where ``1 - lam + xi sqrt(dt/dx) < 0`` (up to time ``t``).

    On the complement of this event every step matrix is entrywise
    nonnegative, so the scheme preserves order.
    """
    lam = grid.dt / grid.dx**2
    m = grid.nt if t is None else grid.time_index(t)
    return int(np.sum(1.0 - lam + noise.xi[:m] * math.sqrt(grid.dt / grid.dx) < 0))

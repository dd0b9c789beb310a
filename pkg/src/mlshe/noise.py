"""Discretized space-time white noise.

A :class:`NoiseField` stores unit normal draws ``xi[j, i]`` on the cells of a
:class:`GridSpec`; the white-noise mass of cell ``(j, i)`` is
``xi[j, i] * sqrt(dt * dx)``.  All scaling happens at the use sites.

Draws come from a Philox counter-based stream.  Rows are generated in
blocks of 64 by a generator keyed by the seed whose counter starts at the
block index, so a row depends only on ``(seed, j, nx)``.  Fields with the
same seed and spatial grid share their leading rows whatever ``nt`` is.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridError, StabilityError

__all__ = [
    "GridSpec",
    "NoiseField",
    "sample_noise",
    "noise_rows",
    "walsh_integrate",
    "time_reverse",
]

BOUNDARY_MODES = ("periodic", "absorbing")


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time grid.

    Parameters
    ----------
    x_min, x_max : float
        Spatial window; nodes are ``x_min + i*dx`` for ``i = 0..nx-1``.
    nx : int
        Number of spatial nodes.
    t_max : float
        Horizon.  It is re-stored as ``nt * dt`` so both agree exactly.
    nt : int
        Number of time steps.
    boundary : {"periodic", "absorbing"}
        Periodic grids identify node ``nx`` with node ``0`` (period ``nx*dx``).
    """

    x_min: float
    x_max: float
    nx: int
    t_max: float
    nt: int
    boundary: str = "periodic"

    def __post_init__(self):
        if int(self.nx) != self.nx or self.nx < 2:
            raise GridError(f"nx must be an integer >= 2, got {self.nx}")
        if int(self.nt) != self.nt or self.nt < 1:
            raise GridError(f"nt must be a positive integer, got {self.nt}")
        if not (self.x_max > self.x_min):
            raise GridError("x_max must exceed x_min")
        if not (self.t_max > 0):
            raise GridError("t_max must be positive")
        if self.boundary not in BOUNDARY_MODES:
            raise GridError(f"boundary must be one of {BOUNDARY_MODES}, got {self.boundary!r}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "nt", int(self.nt))
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))
        dt = float(self.t_max) / self.nt
        object.__setattr__(self, "t_max", dt * self.nt)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dt(self) -> float:
        return self.t_max / self.nt

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.nx)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.nt + 1)

    @property
    def is_stable(self) -> bool:
        """True when ``dt <= dx**2 / 2`` (explicit-scheme condition)."""
        return self.dt <= 0.5 * self.dx**2 * (1 + 1e-12)

    def require_stable(self):
        if not self.is_stable:
            raise StabilityError(
                f"dt = {self.dt:.3g} exceeds dx^2/2 = {0.5 * self.dx**2:.3g}"
            )

    def time_index(self, t: float) -> int:
        """Index ``m`` with ``m*dt == t``; raises when ``t`` is not grid-aligned."""
        m = t / self.dt
        k = int(round(m))
        if abs(m - k) > 1e-9 * max(1.0, abs(m)) or k < 0 or k > self.nt:
            raise GridError(f"t = {t} is not a grid time in [0, {self.t_max}] with dt = {self.dt}")
        return k

    def node_index(self, x: float, exact: bool = False) -> int:
        """Nearest node to ``x``; with ``exact`` the point must sit on a node."""
        r = (x - self.x_min) / self.dx
        k = int(round(r))
        if k < 0 or k >= self.nx:
            raise GridError(f"x = {x} lies outside [{self.x_min}, {self.x_max}]")
        if exact and abs(r - k) > 1e-9 * max(1.0, abs(r)):
            raise GridError(f"x = {x} is not a grid node (dx = {self.dx})")
        return k

    def with_horizon(self, t_max: float, nt: int) -> "GridSpec":
        return GridSpec(self.x_min, self.x_max, self.nx, t_max, nt, self.boundary)

    def to_dict(self) -> dict:
        return {
            "x_min": self.x_min,
            "x_max": self.x_max,
            "nx": self.nx,
            "t_max": self.t_max,
            "nt": self.nt,
            "boundary": self.boundary,
        }

    @classmethod
    def from_spacing(cls, x_min, x_max, dx, t_max, dt, boundary="periodic"):
        """Build a grid from target spacings (rounded to whole node/step counts)."""
        nx = int(round((x_max - x_min) / dx)) + 1
        nt = int(math.ceil(t_max / dt - 1e-9))
        return cls(x_min, x_max, nx, t_max, nt, boundary)


@dataclass(frozen=True, eq=False)
class NoiseField:
    """One realization of lattice white noise (immutable).

    ``xi`` has shape ``(nt, nx)``; row ``j`` covers ``[j*dt, (j+1)*dt)``.
    """

    grid: GridSpec
    xi: np.ndarray = field(repr=False)
    seed: int = 0

    def __post_init__(self):
        xi = self.xi
        shared = (
            isinstance(xi, np.ndarray)
            and xi.dtype == np.float64
            and xi.flags.c_contiguous
            and not xi.flags.writeable
        )
        if not shared:
            xi = np.array(xi, dtype=np.float64, order="C")
            xi.flags.writeable = False
        if xi.shape != (self.grid.nt, self.grid.nx):
            raise GridError(f"xi has shape {xi.shape}, expected {(self.grid.nt, self.grid.nx)}")
        object.__setattr__(self, "xi", xi)

    @property
    def scale(self) -> float:
        """Standard deviation of one cell's white-noise mass, ``sqrt(dt*dx)``."""
        return math.sqrt(self.grid.dt * self.grid.dx)

    def increments(self) -> np.ndarray:
        return self.xi * self.scale

    def shifted(self, m0: int) -> "NoiseField":
        """Noise restarted at row ``m0``: row ``j`` of the result is row ``m0 + j``."""
        g = self.grid
        if not 0 <= m0 < g.nt:
            raise GridError(f"shift {m0} outside [0, {g.nt})")
        sub = GridSpec(g.x_min, g.x_max, g.nx, (g.nt - m0) * g.dt, g.nt - m0, g.boundary)
        return NoiseField(sub, self.xi[m0:], self.seed)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "NoiseField":
        return cls(grid, np.zeros((grid.nt, grid.nx)), seed=0)


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return seed


ROW_BLOCK = 64


def noise_rows(seed: int, nx: int, j0: int, j1: int) -> np.ndarray:
    """Rows ``j0..j1-1`` of the seeded stream, shape ``(j1-j0, nx)``.

    Rows are produced in blocks of ``ROW_BLOCK``; block ``b`` comes from a
    Philox generator keyed by ``seed`` whose counter starts at ``b`` in its
    third word.
    """
    seed = _check_seed(seed)
    out = np.empty((max(j1 - j0, 0), nx))
    b = j0 // ROW_BLOCK
    while b * ROW_BLOCK < j1:
        gen = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, b, 0]))
        block = gen.standard_normal((ROW_BLOCK, nx))
        lo = max(j0, b * ROW_BLOCK)
        hi = min(j1, (b + 1) * ROW_BLOCK)
        out[lo - j0 : hi - j0] = block[lo - b * ROW_BLOCK : hi - b * ROW_BLOCK]
        b += 1
    return out


def sample_noise(grid: GridSpec, seed: int) -> NoiseField:
    """Draw a noise field; deterministic in ``(grid, seed)``."""
    return NoiseField(grid, noise_rows(seed, grid.nx, 0, grid.nt), _check_seed(seed))


def _evaluate_on_cells(f, s, x):
    S, X = np.meshgrid(s, x, indexing="ij")
    try:
        vals = np.asarray(f(S, X), dtype=float)
    except (TypeError, ValueError):
        vals = None
    if vals is None or vals.shape != S.shape:
        vals = np.broadcast_to(np.asarray(np.vectorize(f, otypes=[float])(S, X)), S.shape)
    return vals


def walsh_integrate(noise: NoiseField, f, t_end: float) -> float:
    """Discrete Walsh integral ``sum_{j: s_j < t_end} sum_i f(s_j, x_i) xi[j,i] sqrt(dt dx)``.

    ``f`` is called with broadcast arrays ``(s, x)``; scalar-only callables are
    vectorized automatically.
    """
    g = noise.grid
    if not 0 <= t_end <= g.t_max * (1 + 1e-12):
        raise GridError(f"t_end = {t_end} outside [0, {g.t_max}]")
    m = int(math.ceil(t_end / g.dt - 1e-9))
    if m == 0:
        return 0.0
    vals = _evaluate_on_cells(f, g.dt * np.arange(m), g.x)
    return float(np.sum(vals * noise.xi[:m]) * noise.scale)


def time_reverse(noise: NoiseField, t: float) -> NoiseField:
    """Reverse the first ``t/dt`` rows: row ``j`` becomes row ``t/dt - 1 - j``."""
    m = noise.grid.time_index(t)
    xi = noise.xi.copy()
    xi[:m] = noise.xi[:m][::-1]
    return NoiseField(noise.grid, xi, noise.seed)

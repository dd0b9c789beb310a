"""Multi-layer objects built from SHE solutions sharing one noise.

``K_n(t, x, y) = det[u(t, x_i, y_j)]`` where ``u(t, x_i, .)`` solves the SHE
from a delta at ``x_i``, ``M_n = K_n / (Delta(x) Delta(y))``,
``Z_n(t, a, b) = M_n(t, a 1, b 1) / c_{n,t}`` and
``h_n = log(Z_n / Z_{n-1})``.

Boundary values of ``M_n`` are obtained by Richardson extrapolation along
configurations ``a + ((n-1)/2 - k) h``, ``k = 0..n-1``, which are symmetric
about ``a`` so the error is even in ``h``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GridError, QuadratureError
from .fileio import write_csv
from .kernels import WeylPoint, c_nt, vandermonde, _coords
from .noise import GridSpec, NoiseField
from .she import FieldTrajectory, solve_family

__all__ = [
    "c_nt",
    "LayerField",
    "BoundaryEstimate",
    "Family",
    "k_n",
    "m_n",
    "z_n",
    "h_n",
    "offsets",
    "boundary_points",
    "layer_field",
    "write_layer_csv",
    "write_z_csv",
    "sorted_minors_min",
]


def offsets(n: int, h: float) -> np.ndarray:
    """``((n-1)/2 - k) h`` for ``k = 0..n-1`` (non-increasing)."""
    return ((n - 1) / 2.0 - np.arange(n)) * h


def boundary_steps(n: int, dx: float, levels: int = 3) -> list:
    """Extrapolation steps ``[4 h0, 2 h0, h0]`` keeping every offset on the grid.

    ``h0 = dx`` for odd ``n`` and ``2 dx`` for even ``n`` (offsets are
    multiples of ``h/2`` then).
    """
    h0 = dx if n % 2 == 1 else 2.0 * dx
    return [h0 * 2 ** (levels - 1 - k) for k in range(levels)]


def boundary_points(grid: GridSpec, a: float, n: int, levels: int = 3) -> list:
    """Start points needed to extrapolate ``M_n`` at ``x = a 1``."""
    pts = set()
    for h in boundary_steps(n, grid.dx, levels):
        for o in offsets(n, h):
            pts.add(round(a + o, 12))
    return sorted(pts, reverse=True)


class Family:
    """Trajectories indexed by their delta start point."""

    def __init__(self, trajectories):
        self.trajectories = list(trajectories)
        if not self.trajectories:
            raise DomainError("empty family")
        self.grid = self.trajectories[0].grid
        self._by_node = {}
        for tr in self.trajectories:
            if tr.x0 is None:
                raise DomainError("family members must have delta initial data")
            self._by_node[self.grid.node_index(tr.x0)] = tr

    @classmethod
    def solve(cls, grid: GridSpec, noise: NoiseField, x0s) -> "Family":
        return cls(solve_family(grid, noise, x0s))

    def get(self, x0: float) -> FieldTrajectory:
        k = self.grid.node_index(x0, exact=True)
        if k not in self._by_node:
            raise GridError(f"no trajectory started at x0 = {x0}")
        return self._by_node[k]

    def __len__(self):
        return len(self.trajectories)


def _as_family(family):
    return family if isinstance(family, Family) else Family(family)


def _matrix(fam: Family, t: float, x, y, interpolate: bool):
    rows = [fam.get(xi).value(t, y, interpolate=interpolate) for xi in x]
    return np.array(rows, dtype=float)


def k_n(family, t: float, y, x=None, interpolate: bool = False) -> float:
    """``det[u(t, x_i, y_j)]``.

    Without ``x`` the family's own start points (in order) are used; a plain
    list of ``n`` trajectories is accepted.
    """
    fam = _as_family(family)
    yv, py = _coords(y)
    yv = np.atleast_1d(yv)
    if x is None:
        x = [tr.x0 for tr in fam.trajectories]
    xv, px = _coords(x)
    xv = np.atleast_1d(xv)
    if xv.size != yv.size:
        raise DomainError("x and y must have the same dimension")
    if np.unique(yv).size < yv.size or np.unique(xv).size < xv.size:
        return 0.0  # repeated rows or columns; LU would leave roundoff
    return float(px * py * np.linalg.det(_matrix(fam, t, xv, yv, interpolate)))


@dataclass
class BoundaryEstimate:
    """Richardson extrapolation of ``M_n`` toward a confluent configuration."""

    value: float
    steps: list
    raw: list
    ratio: float
    error: float

    @property
    def cauchy(self) -> bool:
        return bool(self.ratio < 0.6)


def _richardson(steps, vals):
    # error expansion in even powers of h; steps halve
    table = [list(vals)]
    for level in range(1, len(vals)):
        prev = table[-1]
        f = 4.0**level
        table.append([(f * prev[k + 1] - prev[k]) / (f - 1.0) for k in range(len(prev) - 1)])
    best = table[-1][0]
    lower = table[-2][-1] if len(table) > 1 else best
    return best, abs(best - lower)


def _gap_ok(v, dx):
    v = np.sort(np.atleast_1d(v))[::-1]
    return v.size == 1 or np.min(v[:-1] - v[1:]) > 1e-6 * dx


def m_n(family, t: float, x, y, interpolate: bool = False, levels: int = 3, return_details: bool = False):
    """``K_n / (Delta(x) Delta(y))``, extrapolated at confluent points.

    When ``x`` or ``y`` has (nearly) coincident coordinates the configuration
    must be fully collapsed, ``a 1`` or ``b 1``; the value is then the
    Richardson limit over symmetric offsets ``h in [4 h0, 2 h0, h0]``.
    """
    fam = _as_family(family)
    xv = np.sort(np.atleast_1d(np.asarray(_coords(x)[0], float)))[::-1]
    yv = np.sort(np.atleast_1d(np.asarray(_coords(y)[0], float)))[::-1]
    n = xv.size
    dx = fam.grid.dx
    x_conf = not _gap_ok(xv, dx)
    y_conf = not _gap_ok(yv, dx)
    if not (x_conf or y_conf):
        val = k_n(fam, t, yv, x=xv, interpolate=interpolate) / (vandermonde(xv) * vandermonde(yv))
        if return_details:
            return val, None
        return val
    for conf, v, name in ((x_conf, xv, "x"), (y_conf, yv, "y")):
        if conf and not np.allclose(v, v[0], rtol=0, atol=1e-9 * max(1.0, abs(v[0]))):
            raise DomainError(f"{name} is partially confluent; only a fully collapsed point is supported")
    steps = boundary_steps(n, dx, levels)
    raw = []
    for h in steps:
        xs = xv[0] + offsets(n, h) if x_conf else xv
        ys = yv[0] + offsets(n, h) if y_conf else yv
        raw.append(k_n(fam, t, ys, x=xs, interpolate=interpolate) / (vandermonde(xs) * vandermonde(ys)))
    value, err = _richardson(steps, raw)
    d1 = abs(raw[1] - raw[0])
    d2 = abs(raw[2] - raw[1]) if len(raw) > 2 else 0.0
    ratio = d2 / d1 if d1 > 0 else (0.0 if d2 == 0 else math.inf)
    est = BoundaryEstimate(float(value), steps, [float(r) for r in raw], float(ratio), float(err))
    if not np.isfinite(value):
        raise QuadratureError(f"boundary extrapolation failed: steps {steps}, values {raw}")
    return (est.value, est) if return_details else est.value


def z_n(family, t: float, a: float, b: float, n: int | None = None, levels: int = 3, return_details: bool = False):
    """``Z_n(t, a, b) = M_n(t, a 1, b 1) / c_{n,t}``."""
    fam = _as_family(family)
    if n is None:
        n = len(fam)
    if n == 1:
        val = float(fam.get(a).value(t, b))
        return (val, None) if return_details else val
    val, est = m_n(fam, t, np.full(n, a), np.full(n, b), levels=levels, return_details=True)
    val = val / c_nt(n, t)
    return (val, est) if return_details else val


def h_n(z_values) -> list:
    """``h_k = log(Z_k / Z_{k-1})`` with ``Z_0 = 1``."""
    out = []
    prev = 1.0
    for k, z in enumerate(z_values, start=1):
        if not z > 0:
            raise DomainError(f"Z_{k} = {z} is not positive; h_{k} is undefined")
        out.append(math.log(z / prev))
        prev = z
    return out


@dataclass
class LayerField:
    """``K_n`` and ``M_n`` over sorted grid tuples ``y`` for a start configuration ``x``."""

    t: float
    n: int
    x: WeylPoint
    y: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    Z: np.ndarray | None = field(default=None, repr=False)
    h: np.ndarray | None = field(default=None, repr=False)


def layer_field(family, t: float, x, y_nodes) -> LayerField:
    """Evaluate ``K_n, M_n`` at every strictly decreasing tuple drawn from ``y_nodes``."""
    fam = _as_family(family)
    xv = np.sort(np.atleast_1d(np.asarray(_coords(x)[0], float)))[::-1]
    n = xv.size
    nodes = np.sort(np.asarray(y_nodes, dtype=float))[::-1]
    U = np.array([fam.get(xi).value(t, nodes) for xi in xv])
    combos = np.array(list(itertools.combinations(range(nodes.size), n)))
    ys = nodes[combos]
    mats = U[:, combos].transpose(1, 0, 2)
    K = np.linalg.det(mats)
    M = K / (vandermonde(xv) * vandermonde(ys))
    return LayerField(t, n, WeylPoint(xv), ys, K, M)


def write_layer_csv(path, lf: LayerField):
    n = lf.n
    header = ["t"] + [f"x{i+1}" for i in range(n)] + [f"y{i+1}" for i in range(n)] + ["K_n", "M_n"]
    rows = []
    for yv, k, m in zip(lf.y, lf.K, lf.M):
        rows.append([lf.t] + [float(v) for v in lf.x.coords] + [float(v) for v in yv] + [float(k), float(m)])
    write_csv(path, header, rows)


def write_z_csv(path, records):
    """``records`` are tuples ``(t, a, b, Z_n, h_n)``."""
    write_csv(path, ["t", "a", "b", "Z_n", "h_n"], [[float(v) for v in r] for r in records])


def sorted_minors_min(U: np.ndarray) -> float:
    """Smallest 2x2 minor ``U[i1,j1]U[i2,j2] - U[i1,j2]U[i2,j1]`` over ``i1 < i2``, ``j1 < j2``.

    Rows and columns of ``U`` must be ordered the same way (both
    decreasing or both increasing in position).
    """
    m = U.shape[0]
    best = math.inf
    for i1 in range(m - 1):
        a = U[i1]
        b = U[i1 + 1 :]
        minors = a[None, :, None] * b[:, None, :] - a[None, None, :] * b[:, :, None]
        # minors[k, j1, j2] for rows (i1, i1+1+k); keep j1 < j2
        iu = np.triu_indices(U.shape[1], k=1)
        best = min(best, float(np.min(minors[:, iu[0], iu[1]])))
    return best

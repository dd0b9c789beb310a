"""The n-dimensional mild equation with bounded symmetric initial data.

    m(t, y) = J_n(t, y) + A_n int_0^t int Q_{t-s}(y, y') m(s, y') dy'_* W(ds, dy'_1)

On the lattice the Dyson transition kernel is discretized through its
determinantal structure.  For symmetric ``phi``,

    int_{R^n} Q_t(y, y') phi(y') dy' = n! [P_t^{(x)n} (Delta phi)](y) / Delta(y),

and the lattice heat step ``P`` (weights ``lam/2, 1 - lam, lam/2``, the step of
:mod:`mlshe.she`) stands in for ``p_dt``.  Powers of ``P`` form an exact
discrete semigroup, so both ``J_n`` and the stochastic convolution are
computed recursively on the antisymmetric field ``F = Delta m``:

    I_{m+1} = P I_m + F_m sigma_m,    sigma_m(y) = sqrt(dt/dx) sum_a xi[m, y_a].

Symmetrizing the noise over the coordinates turns the weight ``xi(y'_1)``
into ``(1/n) sum_a xi(y'_a)``, and the constants combine to ``A_n n! / n = 1``.
For ``n = 1`` the fixed point is exactly the lattice SHE scheme.

``P`` preserves ``Delta`` exactly for ``n <= 3`` (each coordinate enters
``Delta`` with degree at most 2, where the second difference is exact), so the
zero-noise iterate reproduces constants away from the box edges.  For
``lam <= 1/2`` and absorbing boundaries the chamber kernel ``det[P(y_a, y'_b)]``
is nonnegative, so the fixed point preserves order whenever
``det[P(y_a, y_b)] + sigma_m(y) >= 0`` at every sorted node tuple.
"""
from __future__ import annotations

import itertools
import math
import time as _time
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import CostGuardError, DomainError, GridError, QuadratureError
from .fileio import write_csv
from .kernels import dyson_density, heat_kernel, vandermonde, _coords
from .noise import GridSpec, NoiseField

__all__ = [
    "SymmetricInitialData",
    "ChamberGrid",
    "PicardState",
    "j_term",
    "picard_solve",
    "picard_decay_check",
    "chaos_z1",
    "restart_solve",
    "weak_compare",
    "moment_bound",
    "a_n",
    "MAX_CELLS",
]

# largest nt * nx^n handled by picard_solve
MAX_CELLS = 2 * 10**7


def a_n(n: int) -> float:
    """``A_n = 1/(n-1)!``."""
    return 1.0 / math.factorial(n - 1)


# -- initial data -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SymmetricInitialData:
    """Permutation-symmetric bounded initial data ``g: R^n -> R``.

    ``g`` receives an array with last axis of length ``n``.  Symmetry and the
    bound ``|g| <= bound`` are spot-checked at construction on a fixed set of
    points.
    """

    g: object
    n: int
    bound: float
    name: str = "g"
    check_points: int = 64

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be >= 1")
        rng = np.random.default_rng(12345)
        pts = rng.uniform(-3.0, 3.0, size=(self.check_points, self.n))
        base = self(pts)
        if np.any(np.abs(base) > self.bound * (1 + 1e-12)):
            raise DomainError(f"{self.name} exceeds its declared bound {self.bound}")
        for perm in itertools.permutations(range(self.n)):
            if not np.allclose(self(pts[:, perm]), base, rtol=1e-12, atol=1e-14):
                raise DomainError(f"{self.name} is not permutation symmetric")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(np.asarray(self.g(y), dtype=float), y.shape[:-1])

    @classmethod
    def constant(cls, c: float, n: int) -> "SymmetricInitialData":
        return cls(lambda y: np.full(y.shape[:-1], float(c)), n, abs(float(c)), f"const({c})")

    @classmethod
    def indicator(cls, h: float, n: int, center: float = 0.0) -> "SymmetricInitialData":
        """``1`` on the open cube ``(center - h, center + h)^n``."""
        def g(y):
            return np.all(np.abs(y - center) < h, axis=-1).astype(float)

        return cls(g, n, 1.0, f"indicator({h})")

    @classmethod
    def product(cls, f, n: int, bound: float, name: str = "product") -> "SymmetricInitialData":
        """``prod_a f(y_a)``."""
        return cls(lambda y: np.prod(f(y), axis=-1), n, bound, name)


# -- grids ----------------------------------------------------------------------

class ChamberGrid:
    """Tensor grid ``x^n`` of the 1D noise nodes with chamber bookkeeping."""

    def __init__(self, grid: GridSpec, n: int):
        if n < 1:
            raise DomainError("n must be >= 1")
        self.grid = grid
        self.n = n
        self.shape = (grid.nx,) * n
        mesh = np.meshgrid(*([grid.x] * n), indexing="ij")
        self.points = np.stack(mesh, axis=-1)
        self.delta = np.asarray(vandermonde(self.points), dtype=float).reshape(self.shape)

    def sorted_indices(self, lo: int = 0, hi: int | None = None, stride: int = 1) -> np.ndarray:
        """Index tuples ``i_1 > ... > i_n`` (coordinates strictly decreasing) within ``[lo, hi)``."""
        hi = self.grid.nx if hi is None else hi
        nodes = list(range(lo, hi, stride))[::-1]
        if self.n == 1:
            return np.array(nodes, dtype=int)[:, None]
        return np.array(list(itertools.combinations(nodes, self.n)), dtype=int).reshape(-1, self.n)

    def default_probes(self, max_points: int = 2000) -> np.ndarray:
        nx = self.grid.nx
        lo, hi = nx // 4, nx - nx // 4
        stride = 1
        while True:
            idx = self.sorted_indices(lo, hi, stride)
            if len(idx) <= max_points or stride > nx:
                return idx
            stride += 1

    def coords(self, idx: np.ndarray) -> np.ndarray:
        return self.grid.x[np.asarray(idx)]


def _tensor_step(F: np.ndarray, lam: float, periodic: bool) -> np.ndarray:
    """Apply the lattice heat step along every axis of ``F``."""
    out = F
    for ax in range(F.ndim):
        u = np.moveaxis(out, ax, -1)
        nb = np.empty_like(u)
        if periodic:
            nb[..., 1:-1] = u[..., :-2] + u[..., 2:]
            nb[..., 0] = u[..., -1] + u[..., 1]
            nb[..., -1] = u[..., -2] + u[..., 0]
        else:
            nb[..., 1:-1] = u[..., :-2] + u[..., 2:]
            nb[..., 0] = u[..., 1]
            nb[..., -1] = u[..., -2]
        out = np.moveaxis((1.0 - lam) * u + 0.5 * lam * nb, -1, ax)
    return out


def _noise_weight(xi_row: np.ndarray, n: int, s: float) -> np.ndarray:
    """``s * sum_a xi(y_a)`` on the tensor grid."""
    w = np.zeros((xi_row.size,) * n)
    for a in range(n):
        shape = [1] * n
        shape[a] = xi_row.size
        w = w + xi_row.reshape(shape)
    return s * w


# -- J term (continuum quadrature) ---------------------------------------------

def j_term(g: SymmetricInitialData, t: float, y, box: float = 6.0, nodes: int | None = None) -> float:
    """``(1/n!) int g(y') Q_t(y, y') dy'`` by tensor Gauss-Legendre quadrature.

    The box is ``[min y - box sqrt(t), max y + box sqrt(t)]^n``; ``nodes`` per
    axis defaults to ``max(40, ceil(3 width/sqrt(t)))`` capped for ``n = 3``.
    Confluent ``y`` is handled by the Dyson density's boundary route.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    yv = np.sort(np.atleast_1d(np.asarray(_coords(y)[0], dtype=float)))[::-1]
    n = yv.size
    if n != g.n:
        raise DomainError(f"y has dimension {n}, g has {g.n}")
    st = math.sqrt(t)
    lo, hi = yv.min() - box * st, yv.max() + box * st
    if nodes is None:
        nodes = max(40, int(math.ceil(3.0 * (hi - lo) / st)))
        nodes = min(nodes, {1: 4000, 2: 600, 3: 90}.get(n, 40))
    def integrate(m):
        z, w = np.polynomial.legendre.leggauss(m)
        pts = 0.5 * (hi - lo) * z + 0.5 * (hi + lo)
        ww = 0.5 * (hi - lo) * w
        mesh = np.stack(np.meshgrid(*([pts] * n), indexing="ij"), axis=-1).reshape(-1, n)
        wts = np.prod(np.stack(np.meshgrid(*([ww] * n), indexing="ij"), axis=-1).reshape(-1, n), axis=-1)
        gv = g(mesh)
        keep = gv != 0
        if not np.any(keep):
            return 0.0
        q = np.asarray(dyson_density(t, yv, mesh[keep]), dtype=float)
        return float(np.sum(wts[keep] * gv[keep] * q)) / math.factorial(n)
    val = integrate(nodes)
    if not np.isfinite(val):
        raise QuadratureError(f"j_term is not finite at t={t}, y={yv}")
    return val


# -- Picard iteration -----------------------------------------------------------

@dataclass(eq=False)
class PicardState:
    """Iterate ``m^k`` stored as ``F = Delta m`` on the tensor grid.

    ``F`` has shape ``(nt + 1,) + (nx,)*n``; time index ``m`` corresponds to
    absolute time ``t0 + m dt``.
    """

    k: int
    grid: GridSpec
    n: int
    F: np.ndarray = field(repr=False)
    d: list
    probes: np.ndarray = field(repr=False)
    converged: bool
    t0: float = 0.0
    tol: float = 0.0
    timings: dict = field(default_factory=dict)

    @property
    def chamber(self) -> ChamberGrid:
        return ChamberGrid(self.grid, self.n)

    def _index(self, t):
        return self.grid.time_index(t - self.t0)

    def field_at(self, t: float) -> np.ndarray:
        """``m(t, .)`` on the tensor grid; off-chamber-wall points only (NaN where ``Delta = 0``)."""
        delta = self.chamber.delta
        with np.errstate(invalid="ignore", divide="ignore"):
            out = self.F[self._index(t)] / delta
        out[delta == 0] = np.nan
        return out

    def sorted_values(self, t: float, idx: np.ndarray | None = None) -> np.ndarray:
        ch = self.chamber
        idx = ch.sorted_indices() if idx is None else np.asarray(idx)
        flat = np.ravel_multi_index(tuple(idx.T), ch.shape)
        return self.F[self._index(t)].reshape(-1)[flat] / ch.delta.reshape(-1)[flat]

    def value(self, t: float, y) -> float:
        yv = np.sort(np.atleast_1d(np.asarray(_coords(y)[0], dtype=float)))[::-1]
        idx = np.array([[self.grid.node_index(v, exact=True) for v in yv]])
        if len(set(idx[0])) < self.n:
            raise GridError("y lies on a chamber wall; the lattice iterate is stored off the walls only")
        return float(self.sorted_values(t, idx)[0])

    def report(self) -> dict:
        return {
            "k": self.k,
            "n": self.n,
            "d": [float(v) for v in self.d],
            "converged": self.converged,
            "tol": self.tol,
            "t0": self.t0,
            "probes": int(len(self.probes)),
            "timings": self.timings,
        }

    def to_csv(self, path, times=None):
        """Rows ``t, y_1..y_n, m`` over strictly sorted grid tuples."""
        ch = self.chamber
        idx = ch.sorted_indices()
        ys = ch.coords(idx)
        times = [self.t0 + m * self.grid.dt for m in range(self.grid.nt + 1)] if times is None else times
        rows = []
        for t in times:
            vals = self.sorted_values(t, idx)
            rows.extend([float(t)] + [float(c) for c in yy] + [float(v)] for yy, v in zip(ys, vals))
        write_csv(path, ["t"] + [f"y{a+1}" for a in range(self.n)] + ["m"], rows)


def _initial_F(init, ch: ChamberGrid) -> np.ndarray:
    if isinstance(init, SymmetricInitialData):
        if init.n != ch.n:
            raise DomainError(f"initial data has n={init.n}, grid has n={ch.n}")
        vals = init(ch.points)
    else:
        vals = np.asarray(init, dtype=float)
        if vals.shape != ch.shape:
            raise GridError(f"initial field has shape {vals.shape}, expected {ch.shape}")
    F = np.where(ch.delta == 0, 0.0, ch.delta * np.nan_to_num(vals))
    return F


def _resolve_grid(noise: NoiseField, ygrid) -> ChamberGrid:
    if isinstance(ygrid, ChamberGrid):
        if ygrid.grid != noise.grid:
            raise GridError("ygrid must be built on the noise grid")
        return ygrid
    return ChamberGrid(noise.grid, int(ygrid))


def picard_solve(g, noise: NoiseField, ygrid, k_max: int = 60, tol: float = 1e-12,
                 probes=None, strict_reduce: bool = True, m0=None, d_times: str = "all") -> PicardState:
    """Picard iteration on the lattice up to ``k_max`` or until ``d_k < tol``.

    Parameters
    ----------
    g : SymmetricInitialData or array
        Initial data; an array is a symmetric field on the tensor grid.
    noise : NoiseField
        Its grid supplies the ``y'_1`` axis, the time steps and the nodes of
        every other coordinate.
    ygrid : int or ChamberGrid
        Dimension ``n`` (``n <= 3``) or a prepared chamber grid.
    probes : array of index tuples, optional
        Points where ``d_k = sup_t sup_probe |m^k - m^{k-1}|`` is measured.
    strict_reduce : bool
        Accepted for interface symmetry; the recursion is always sequential.
    m0 : PicardState, optional
        Starting iterate other than ``J_n`` (same grid); used to check that the
        limit does not depend on it.
    """
    grid = noise.grid
    n = ygrid if isinstance(ygrid, (int, np.integer)) else ygrid.n
    if n > 3:
        raise CostGuardError("picard_solve supports n <= 3")
    cells = (grid.nt + 1) * grid.nx**n
    if cells > MAX_CELLS:
        raise CostGuardError(f"(nt+1) * nx^n = {cells} exceeds {MAX_CELLS}")
    ch = _resolve_grid(noise, ygrid)
    grid.require_stable()
    lam = grid.dt / grid.dx**2
    s = math.sqrt(grid.dt / grid.dx)
    periodic = grid.boundary == "periodic"
    probes = ch.default_probes() if probes is None else np.asarray(probes, dtype=int).reshape(-1, n)
    flat = np.ravel_multi_index(tuple(probes.T), ch.shape)
    inv_delta = 1.0 / ch.delta.reshape(-1)[flat]
    # the constants A_n * n! / n of the symmetrized stochastic term equal 1
    coef = a_n(n) * math.factorial(n) / n

    t_start = _time.perf_counter()
    F0 = np.empty((grid.nt + 1,) + ch.shape)
    F0[0] = _initial_F(g, ch)
    for m in range(grid.nt):
        F0[m + 1] = _tensor_step(F0[m], lam, periodic)
    weights = [coef * _noise_weight(noise.xi[m], n, s) for m in range(grid.nt)]
    prev = F0 if m0 is None else m0.F.copy()
    if prev.shape != F0.shape:
        raise GridError("starting iterate does not match the grid")
    d = []
    converged = False
    k = 0
    cur = None
    while k < k_max:
        cur = np.empty_like(F0)
        cur[0] = F0[0]
        acc = np.zeros(ch.shape)
        for m in range(grid.nt):
            acc = _tensor_step(acc, lam, periodic) + prev[m] * weights[m]
            cur[m + 1] = F0[m + 1] + acc
        rows = slice(None) if d_times == "all" else slice(grid.nt, grid.nt + 1)
        diff = np.abs((cur[rows] - prev[rows]).reshape(-1, cur[0].size)[:, flat]) * np.abs(inv_delta)
        d.append(float(diff.max()))
        k += 1
        prev = cur
        if d[-1] < tol:
            converged = True
            break
    timings = {"seconds": _time.perf_counter() - t_start}
    F = prev if cur is not None else F0
    return PicardState(k, grid, n, F, d, probes, converged, 0.0, tol, timings)


def picard_decay_check(state) -> dict:
    """Ratio-test diagnostics for the d-sequence.

    The bound ``d_k^2 <~ c^{k+1} t^{(k+1)/2} / Gamma((k+1)/2 + 1)`` makes the
    ratios ``d_{k+1}/d_k`` eventually decrease like ``k^{-1/4}``.  The check
    regresses ``log(d_{k+1}/d_k)`` on ``log k`` over the second half of the
    sequence (values at the roundoff floor dropped) and passes when the
    slope is below ``-0.05``.  A geometric sequence has slope 0.
    """
    d = np.asarray(state.d if isinstance(state, PicardState) else state, dtype=float)
    if d.size < 3:
        raise DomainError("at least three iterations are needed")
    keep = d > max(d.max() * 1e-14, 1e-300)
    d = d[: np.argmin(keep) if not keep.all() else d.size]
    if d.size < 3:
        raise DomainError("fewer than three d_k above the roundoff floor")
    ratios = d[1:] / d[:-1]
    k = np.arange(1, ratios.size + 1, dtype=float)
    half = max(ratios.size // 2, 0)
    tail_k, tail_r = k[half:], ratios[half:]
    if tail_k.size >= 2:
        slope = float(np.polyfit(np.log(tail_k), np.log(tail_r), 1)[0])
    else:
        slope = float(np.log(ratios[-1] / ratios[0]) / np.log(k[-1] / k[0]))
    # envelope fit log d_k = a + b k - 0.5 log Gamma(k/2 + 1)
    kk = np.arange(d.size, dtype=float)
    target = np.log(d) + 0.5 * special.gammaln(kk / 2 + 1)
    coef = np.polyfit(kk, target, 1)
    resid = target - np.polyval(coef, kk)
    return {
        "pass": bool(slope < -0.05),
        "ratios": ratios.tolist(),
        "tail_slope": slope,
        "envelope": {"log_rate": float(coef[0]), "intercept": float(coef[1]), "rms_residual": float(np.sqrt(np.mean(resid**2)))},
    }


def restart_solve(M_tau, noise: NoiseField, tau: float, extra_t: float, k_max: int = 60,
                  tol: float = 1e-12, probes=None):
    """Continue from the field ``M_tau`` at time ``tau`` with the noise rows after ``tau``.

    ``M_tau`` is a :class:`PicardState` covering ``tau`` or a symmetric
    field on the tensor grid.  The result is indexed by absolute time
    ``tau + s``; ``extra_t = 0`` returns the input field.
    """
    g = noise.grid
    m_tau = g.time_index(tau)
    if isinstance(M_tau, PicardState):
        field0 = M_tau.field_at(tau)
        n = M_tau.n
    else:
        field0 = np.asarray(M_tau, dtype=float)
        n = field0.ndim
    if extra_t == 0:
        return field0
    steps = int(round(extra_t / g.dt))
    if abs(steps * g.dt - extra_t) > 1e-9 * max(1.0, extra_t) or m_tau + steps > g.nt:
        raise GridError(f"extra_t = {extra_t} is not a whole number of steps within the noise horizon")
    sub = noise.shifted(m_tau)
    sub = NoiseField(sub.grid.with_horizon(steps * g.dt, steps), sub.xi[:steps], noise.seed)
    state = picard_solve(field0, sub, n, k_max=k_max, tol=tol, probes=probes)
    state.t0 = tau
    return state


def _chamber_diagonal(idx: np.ndarray, lam: float) -> np.ndarray:
    """``det[P(y_a, y_b)]`` for sorted node tuples (absorbing lattice).

    The matrix splits into runs of adjacent nodes; a run of length ``r`` has
    the tridiagonal Toeplitz determinant ``D_r = (1-lam) D_{r-1} - (lam/2)^2 D_{r-2}``.
    """
    n = idx.shape[1]
    D = [1.0, 1.0 - lam]
    for r in range(2, n + 1):
        D.append((1.0 - lam) * D[-1] - 0.25 * lam * lam * D[-2])
    out = np.ones(len(idx))
    run = np.ones(len(idx), dtype=int)
    for a in range(1, n):
        adj = (idx[:, a - 1] - idx[:, a]) == 1
        closing = ~adj
        out = np.where(closing, out * np.take(D, run), out)
        run = np.where(adj, run + 1, 1)
    return out * np.take(D, run)


def _predicted_violations(noise: NoiseField, n: int, ch: ChamberGrid) -> int:
    s = math.sqrt(noise.grid.dt / noise.grid.dx)
    lam = noise.grid.dt / noise.grid.dx**2
    idx = ch.sorted_indices()
    flat = np.ravel_multi_index(tuple(idx.T), ch.shape)
    diag = _chamber_diagonal(idx, lam)
    count = 0
    for m in range(noise.grid.nt):
        w = diag + _noise_weight(noise.xi[m], n, s).reshape(-1)[flat]
        count += int(np.sum(w < 0))
    return count


def weak_compare(g1, g2, noise: NoiseField, ygrid, k_max: int = 60, tol: float = 1e-12, atol: float = 1e-9) -> dict:
    """Solve with ``g1`` and ``g2`` on the same noise and compare.

    Reports the minimum of ``m^{g1} - m^{g2}`` over every time level and
    strictly sorted grid tuple, the number of points below ``-atol`` and the
    predicted count of (time step, sorted tuple) cells where
    ``det[P(y_a, y_b)] + sqrt(dt/dx) sum_a xi(y_a) < 0``; outside those cells
    the lattice step is order preserving.

    Needs an absorbing grid: on a periodic lattice two coordinates can swap
    order through the seam, the chamber kernel picks up negative entries and
    the comparison fails near the edges for reasons unrelated to the noise.
    """
    if noise.grid.boundary != "absorbing":
        raise DomainError("weak_compare needs an absorbing grid; the periodic wrap breaks chamber order")
    ch = _resolve_grid(noise, ygrid)
    v1 = g1(ch.points) if isinstance(g1, SymmetricInitialData) else np.asarray(g1, float)
    v2 = g2(ch.points) if isinstance(g2, SymmetricInitialData) else np.asarray(g2, float)
    idx = ch.sorted_indices()
    flat = np.ravel_multi_index(tuple(idx.T), ch.shape)
    if np.any(v1.reshape(-1)[flat] < v2.reshape(-1)[flat]):
        raise DomainError("g1 >= g2 fails on the grid")
    s1 = picard_solve(g1, noise, ch, k_max, tol)
    s2 = picard_solve(g2, noise, ch, k_max, tol)
    diff = (s1.F - s2.F).reshape(noise.grid.nt + 1, -1)[:, flat] / ch.delta.reshape(-1)[flat]
    pos = np.unravel_index(int(np.argmin(diff)), diff.shape)
    return {
        "min_difference": float(diff.min()),
        "argmin": {"time": float(pos[0] * noise.grid.dt), "y": ch.coords(idx[pos[1]]).tolist()},
        "violations": int(np.sum(diff < -atol)),
        "predicted_violations": _predicted_violations(noise, ch.n, ch),
        "converged": bool(s1.converged and s2.converged),
        "d1": s1.d,
        "d2": s2.d,
    }


# -- chaos expansion for n = 1 -------------------------------------------------

def chaos_z1(noise: NoiseField, t: float, x: float, y: float, k_max: int = 1) -> list:
    """Partial sums ``S_0..S_{k_max}`` of the chaos expansion of ``Z_1(t, x, y)``.

    ``S_0 = p_t(x - y)``; the ``k``-th term is the discretized multiple Walsh
    integral

        sum_{j_1 < ... < j_k} sum_{i_1..i_k} p_{s_1}(x_{i_1} - x) prod p_{s_l - s_{l-1}}(x_{i_l} - x_{i_{l-1}})
            p_{t - s_k}(y - x_{i_k}) prod xi[j_l, i_l] sqrt(dt dx)

    with strictly increasing time cells and midpoint times ``s_j = (j + 1/2) dt``,
    which makes the sum exactly symmetric under time reversal of the noise.
    """
    if k_max > 3:
        raise CostGuardError("chaos_z1 supports k_max <= 3")
    if k_max < 0:
        raise DomainError("k_max must be >= 0")
    g = noise.grid
    m = g.time_index(t)
    if m == 0:
        raise DomainError("t must be positive")
    xs = g.x
    s = (np.arange(m) + 0.5) * g.dt
    c = noise.scale
    xi = noise.xi[:m]
    sums = [float(heat_kernel(t, x - y))]
    if k_max == 0:
        return sums
    # V[j] = density-weighted noise of the current order at time cell j
    V = heat_kernel(s[:, None], xs[None, :] - x) * xi * c
    back = heat_kernel(t - s[:, None], y - xs[None, :])
    total = sums[0]
    for k in range(1, k_max + 1):
        if k > 1:
            W = np.zeros_like(V)
            for lag in range(1, m):
                H = heat_kernel(lag * g.dt, xs[:, None] - xs[None, :])
                W[lag:] += V[:-lag] @ H
            V = W * xi * c
        total += float(np.sum(V * back))
        sums.append(total)
    return sums


# -- moment bound -----------------------------------------------------------------

def moment_bound(t: float, K: float, n: int, C4: float, p: float = 2.0, c_p: float | None = None,
                 reading: str = "series") -> dict:
    """``2 K^2 exp(A^2 c_p^4 t) (1 + erf(A c_p^2 sqrt(t)))`` for ``||M_n(t, y)||_p^2``.

    ``reading`` selects the constant ``A``:

    * ``"series"``: ``A = C4 A_n^2 sqrt(pi)``, the value for which the Picard
      bound sums exactly to the erf series;
    * ``"text"``: ``A = 2 C4 A_n^2 sqrt(pi)`` (the substitution as printed);
    * ``"sqrt"``: ``A = 2 C4^{1/2} A_n pi^{1/4}``.

    ``c_p`` defaults to 1 for ``p = 2`` (Ito isometry) and ``2 sqrt(p)``
    otherwise.
    """
    if c_p is None:
        c_p = 1.0 if p == 2 else 2.0 * math.sqrt(p)
    an = a_n(n)
    A = {
        "series": C4 * an**2 * math.sqrt(math.pi),
        "text": 2.0 * C4 * an**2 * math.sqrt(math.pi),
        "sqrt": 2.0 * math.sqrt(C4) * an * math.pi**0.25,
    }
    if reading not in A:
        raise DomainError(f"unknown reading {reading!r}; choose from {sorted(A)}")
    a = A[reading]
    x = a * c_p**2 * math.sqrt(t)
    return {"A": a, "x": x, "bound": 2.0 * K**2 * math.exp(x * x) * (1.0 + math.erf(x)), "reading": reading}

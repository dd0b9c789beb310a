"""Statistical post-processing of simulated fields and kernels.

Hölder exponents come from second-order structure functions
``S(h) = E|f(. + h) - f(.)|^2`` fitted as ``log S = 2 alpha log h + c``.  The
reported standard error is a delete-one jackknife over slices, so it reflects
sampling noise and shrinks like ``1/sqrt(N)``; the residual standard error of
the regression is kept separately as ``fit_se``.

The kernel continuity integrals are evaluated with the contour one-point
kernel.  Time integrals use ``s = r^2`` (the ``1/sqrt(s)`` singularity of
``||K_s||^2`` becomes bounded) and Gauss-Legendre panels that are refined
geometrically toward the scale of the increment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, QuadratureError
from .fileio import write_csv
from .kernels import ContourSpec, _coords, _sorted_desc, one_point_kernel

__all__ = [
    "HolderReport",
    "holder_exponent",
    "positivity_report",
    "ContinuityReport",
    "continuity_integrals",
    "kernel_continuity_check",
    "heat_continuity_integrals",
    "EnsembleComparison",
    "compare_ensembles",
    "loglog_slope",
]

MIN_SLICES = 20
MIN_SAMPLES = 100


# -- Hölder exponents ----------------------------------------------------------

@dataclass
class HolderReport:
    """Result of :func:`holder_exponent`.

    Attributes
    ----------
    direction : str
        ``"space"`` or ``"time"``.
    lags : np.ndarray
        Lags in grid steps.
    h : np.ndarray
        Lags in physical units (``lags * spacing``).
    structure : np.ndarray
        Ensemble structure function ``S(h)``.
    alpha : float
        Fitted exponent (half the log-log slope).
    se : float
        Jackknife standard error of ``alpha`` over slices.
    fit_se : float
        Residual standard error of the slope regression, halved.
    n_slices : int
        Ensemble size.
    """

    direction: str
    lags: np.ndarray
    h: np.ndarray
    structure: np.ndarray
    alpha: float
    se: float
    fit_se: float
    n_slices: int

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "lags": [int(v) for v in self.lags],
            "h": [float(v) for v in self.h],
            "structure": [float(v) for v in self.structure],
            "alpha": self.alpha,
            "se": self.se,
            "fit_se": self.fit_se,
            "n_slices": self.n_slices,
        }

    def to_csv(self, path):
        write_csv(path, ["lag_steps", "h", "S"], [[int(k), float(h), float(s)] for k, h, s in zip(self.lags, self.h, self.structure)])


def loglog_slope(h, v):
    """Least squares slope of ``log v`` against ``log h`` and its standard error."""
    lh = np.log(np.asarray(h, dtype=float))
    lv = np.log(np.asarray(v, dtype=float))
    A = np.vstack([lh, np.ones_like(lh)]).T
    coef, *_ = np.linalg.lstsq(A, lv, rcond=None)
    if lh.size > 2:
        resid = lv - A @ coef
        s2 = float(resid @ resid) / (lh.size - 2)
        se = math.sqrt(s2 / float(np.sum((lh - lh.mean()) ** 2)))
    else:
        se = 0.0
    return float(coef[0]), se


def _increments_sq(arr: np.ndarray, lag: int, axis: int):
    d = np.take(arr, np.arange(lag, arr.shape[axis]), axis=axis) - np.take(arr, np.arange(arr.shape[axis] - lag), axis=axis)
    return float(np.sum(d * d)), d.size


def holder_exponent(samples, direction: str = "space", lags=None, spacing: float = 1.0) -> HolderReport:
    """Fit a Hölder exponent to an ensemble of field slices.

    Parameters
    ----------
    samples : sequence of arrays
        One array per independent slice.  For ``direction="space"`` increments
        are taken along the last axis, for ``"time"`` along the first axis
        (a 2-D slice ``u[m, i]`` contributes every column).
    direction : {"space", "time"}
    lags : sequence of int, optional
        Lags in grid steps; default ``2, 4, 8, 16, 32``.  They must span at
        least one decade.
    spacing : float
        Grid step in the chosen direction.

    Raises
    ------
    DomainError
        Fewer than 20 slices, lags out of range or spanning less than a
        decade, or a structure function that vanishes (constant field).
    """
    if direction not in ("space", "time"):
        raise DomainError(f"direction must be 'space' or 'time', got {direction!r}")
    slices = [np.asarray(s, dtype=float) for s in samples]
    if len(slices) < MIN_SLICES:
        raise DomainError(f"need at least {MIN_SLICES} slices, got {len(slices)}")
    lags = np.array([2, 4, 8, 16, 32] if lags is None else lags, dtype=int)
    if lags.size < 2 or np.any(lags < 1):
        raise DomainError("lags must be positive integers, at least two of them")
    if lags.max() < 10 * lags.min():
        raise DomainError(f"lags {lags.min()}..{lags.max()} span less than a decade")
    axis = -1 if direction == "space" else 0
    n_sl = len(slices)
    sums = np.zeros((n_sl, lags.size))
    counts = np.zeros((n_sl, lags.size))
    for i, s in enumerate(slices):
        length = s.shape[axis]
        if lags.max() >= length:
            raise DomainError(f"lag {lags.max()} exceeds the slice length {length}")
        for k, lag in enumerate(lags):
            sums[i, k], counts[i, k] = _increments_sq(s, int(lag), axis)
    total_s, total_c = sums.sum(axis=0), counts.sum(axis=0)
    S = total_s / total_c
    if not np.all(S > 0):
        raise DomainError("structure function vanishes: the field is constant along this direction")
    h = lags * float(spacing)
    slope, fit_se = loglog_slope(h, S)
    # delete-one jackknife over slices
    jack = np.empty(n_sl)
    for i in range(n_sl):
        Si = (total_s - sums[i]) / (total_c - counts[i])
        if not np.all(Si > 0):
            raise DomainError("structure function vanishes after removing one slice")
        jack[i] = loglog_slope(h, Si)[0]
    se = math.sqrt((n_sl - 1) / n_sl * float(np.sum((jack - jack.mean()) ** 2)))
    alpha = slope / 2.0
    if not math.isfinite(alpha):
        raise DomainError("fitted exponent is not finite")
    return HolderReport(direction, lags, h, S, alpha, se / 2.0, fit_se / 2.0, n_sl)


# -- positivity ----------------------------------------------------------------

def positivity_report(values, threshold: float = 0.0):
    """``(fraction > threshold, min, argmin)`` over the finite entries.

    NaN entries (e.g. chamber walls where a field is undefined) are skipped.
    ``argmin`` is an index tuple into ``values``.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise DomainError("empty field")
    ok = np.isfinite(v)
    if not ok.any():
        raise DomainError("field has no finite entries")
    masked = np.where(ok, v, np.inf)
    k = int(np.argmin(masked))
    frac = float(np.count_nonzero(v[ok] > threshold)) / float(np.count_nonzero(ok))
    return frac, float(masked.flat[k]), tuple(int(i) for i in np.unravel_index(k, v.shape))


# -- kernel continuity ---------------------------------------------------------

def _gl_panels(breaks, nodes):
    g, w = np.polynomial.legendre.leggauss(nodes)
    r, wr = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        r.append(0.5 * (b - a) * g + 0.5 * (a + b))
        wr.append(0.5 * (b - a) * w)
    return np.concatenate(r), np.concatenate(wr)


def _geometric_breaks(top: float, scale: float, below: int = 3):
    """Breakpoints ``0 < ... < top`` halving from ``top`` down to ``scale / 2^below``."""
    b = [top]
    while b[-1] > scale * 2.0 ** (-below):
        b.append(b[-1] / 2.0)
    b.append(0.0)
    return np.array(b[::-1])


def _y_grid(centers, s: float, ppu: int, half_width: float):
    """Trapezoid nodes on the union of ``[c - hw sqrt(s), c + hw sqrt(s)]``."""
    rs = math.sqrt(s)
    iv = sorted((c - half_width * rs, c + half_width * rs) for c in centers)
    merged = [list(iv[0])]
    for lo, hi in iv[1:]:
        if lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    ys, ws = [], []
    for lo, hi in merged:
        m = max(32, int(math.ceil((hi - lo) / rs * ppu)))
        y = np.linspace(lo, hi, m + 1)
        w = np.full(m + 1, (hi - lo) / m)
        w[0] *= 0.5
        w[-1] *= 0.5
        ys.append(y)
        ws.append(w)
    return np.concatenate(ys), np.concatenate(ws)


# Looser than the kernel default: the integrals only need a few digits and
# agree with the default spec to ~1e-12 on the standard sweep.
CONTINUITY_SPEC = ContourSpec(tol=1e-8, n_gamma=128, n_vertical=64)


@dataclass(frozen=True)
class _Quad:
    spec: ContourSpec = CONTINUITY_SPEC
    nodes: int = 8
    points_per_unit: int = 8
    half_width: float = 8.0


def _diff_sq(q: _Quad, s1, x, s2, z):
    """``int_R (K_{s1}(x, y) - K_{s2}(z, y))^2 dy`` with ``s1 >= s2``."""
    if s1 <= 4.0 * s2:
        # common grid at the finer resolution, wide enough for the wider kernel
        y, w = _y_grid(list(x) + list(z), s2, q.points_per_unit, q.half_width * math.sqrt(s1 / s2))
        d = one_point_kernel(s1, x, y, q.spec) - one_point_kernel(s2, z, y, q.spec)
        return float(np.sum(w * d * d))
    # widely different scales: expand the square, the cross term lives on
    # the grid of the narrow kernel where the wide one is smooth
    y, w = _y_grid(list(z), s2, q.points_per_unit, q.half_width)
    cross = float(np.sum(w * one_point_kernel(s1, x, y, q.spec) * one_point_kernel(s2, z, y, q.spec)))
    return _norm_sq(q, s1, x) + _norm_sq(q, s2, z) - 2.0 * cross


def _norm_sq(q: _Quad, s, x):
    y, w = _y_grid(list(x), s, q.points_per_unit, q.half_width)
    k = one_point_kernel(s, x, y, q.spec)
    return float(np.sum(w * k * k))


def continuity_integrals(x, z, t: float, u: float, quad: _Quad | None = None) -> dict:
    """The three continuity integrals for the one-point kernel.

    Returns ``space = int_0^t ||K_s(x) - K_s(z)||^2 ds``,
    ``shift = int_0^u ||K_{t-u+s}(x) - K_s(x)||^2 ds`` and
    ``tail = int_u^t ||K_{t-s}(x)||^2 ds`` where ``||.||`` is the ``L^2(dy)``
    norm.  Equal arguments give exactly zero.
    """
    q = quad or _Quad()
    xs = _sorted_desc(_coords(x)[0])
    zs = _sorted_desc(_coords(z)[0])
    if xs.size != zs.size:
        raise DomainError("x and z must have the same dimension")
    if not 0 < u <= t:
        raise DomainError("need 0 < u <= t")
    out = {}
    h = float(np.linalg.norm(xs - zs))
    if h == 0.0:
        out["space"] = 0.0
    else:
        r, wr = _gl_panels(_geometric_breaks(math.sqrt(t), h), q.nodes)
        out["space"] = float(sum(2 * ri * wi * _diff_sq(q, ri * ri, xs, ri * ri, zs) for ri, wi in zip(r, wr)))
    delta = t - u
    if delta == 0.0:
        out["shift"] = 0.0
        out["tail"] = 0.0
    else:
        r, wr = _gl_panels(_geometric_breaks(math.sqrt(u), math.sqrt(delta)), q.nodes)
        out["shift"] = float(sum(2 * ri * wi * _diff_sq(q, delta + ri * ri, xs, ri * ri, xs) for ri, wi in zip(r, wr)))
        r, wr = _gl_panels(_geometric_breaks(math.sqrt(delta), math.sqrt(delta), below=0), q.nodes)
        out["tail"] = float(sum(2 * ri * wi * _norm_sq(q, ri * ri, xs) for ri, wi in zip(r, wr)))
    for k, v in out.items():
        if not (math.isfinite(v) and v >= 0):
            raise QuadratureError(f"continuity integral {k} evaluated to {v}")
    return out


def heat_continuity_integrals(h: float, t: float, u: float) -> dict:
    """Closed-form values of the three integrals for ``n = 1``.

    With ``K_s = p_s`` every ``y`` integral is a Gaussian convolution,
    ``||p_a(. - x) - p_b(. - z)||^2 = p_{2a}(0) + p_{2b}(0) - 2 p_{a+b}(x - z)``,
    and the ``s`` integrals are elementary.
    """
    def g(r, c):
        # int_0^r exp(-c/(4 s)) / sqrt(4 pi s) ds
        if c == 0:
            return math.sqrt(r / math.pi)
        a = math.sqrt(c / (4.0 * r))
        return math.sqrt(r / math.pi) * math.exp(-a * a) - 0.5 * math.sqrt(c) * math.erfc(a)

    space = 2.0 * (g(t, 0.0) - g(t, h * h))
    d = t - u
    # shift: int_0^u p_{2s+2d}(0) + p_{2s}(0) - 2 p_{2s+d}(0) ds
    shift = (math.sqrt((u + d) / math.pi) - math.sqrt(d / math.pi)) + math.sqrt(u / math.pi) - 2.0 * (math.sqrt((u + d / 2) / math.pi) - math.sqrt(d / (2 * math.pi)))
    tail = math.sqrt(d / math.pi)
    return {"space": space, "shift": shift, "tail": tail}


@dataclass
class ContinuityReport:
    """Slopes and constants of the kernel continuity integrals."""

    n: int
    t: float
    alpha: float
    increments: list
    space: list
    shift: list
    tail: list
    slopes: dict
    constants: dict
    tolerance: float
    passed: dict

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "T": self.t,
            "alpha": self.alpha,
            "increments": self.increments,
            "space": self.space,
            "shift": self.shift,
            "tail": self.tail,
            "slopes": self.slopes,
            "constants": self.constants,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _default_pair_base(n: int):
    return np.linspace(0.5 * (n - 1), -0.5 * (n - 1), n)


def kernel_continuity_check(n: int, pairs=None, T: float = 1.0, spec: ContourSpec | None = None,
                            increments=None, alpha: float = 0.45, tolerance: float = 0.15,
                            nodes: int = 8, points_per_unit: int = 8) -> ContinuityReport:
    """Verify the scalings ``|x - z|``, ``|t - u|^alpha`` and ``|t - u|^{1/2}``.

    Parameters
    ----------
    n : int
        Number of particles, at most 3.
    pairs : list of (x, z), optional
        Start-point pairs for the spatial integral; default ``x`` spread by 1
        and ``z = x + h e_1`` for ``h`` in ``increments``.
    T : float
        Time horizon; ``t = T`` and ``u = T - delta`` with ``delta`` from ``increments``.
    increments : sequence of float
        Default ``0.01 .. 0.16`` doubling.
    alpha : float
        Target exponent for the shifted-time integral (any value below 1/2).
    """
    if not 1 <= n <= 3:
        raise DomainError("kernel continuity check supports 1 <= n <= 3")
    q = _Quad(spec or CONTINUITY_SPEC, nodes, points_per_unit)
    incs = [0.01, 0.02, 0.04, 0.08, 0.16] if increments is None else [float(v) for v in increments]
    base = _default_pair_base(n)
    if pairs is None:
        e = np.zeros(n)
        e[0] = 1.0
        pairs = [(base, base + h * e) for h in incs]
    hs = [float(np.linalg.norm(np.asarray(x, float) - np.asarray(z, float))) for x, z in pairs]
    space = [continuity_integrals(x, z, T, T, q)["space"] for x, z in pairs]
    shift, tail = [], []
    for d in incs:
        r = continuity_integrals(base, base, T, T - d, q)
        shift.append(r["shift"])
        tail.append(r["tail"])
    slopes = {
        "space": loglog_slope(hs, space)[0],
        "shift": loglog_slope(incs, shift)[0],
        "tail": loglog_slope(incs, tail)[0],
    }
    constants = {
        "C1": max(v / h for v, h in zip(space, hs)),
        "C2": max(v / d**alpha for v, d in zip(shift, incs)),
        "C3": max(v / math.sqrt(d) for v, d in zip(tail, incs)),
    }
    targets = {"space": 1.0, "shift": alpha, "tail": 0.5}
    passed = {k: bool(abs(slopes[k] - targets[k]) <= tolerance) for k in targets}
    return ContinuityReport(n, T, alpha, incs, space, shift, tail, slopes, constants, tolerance, passed)


# -- distributional comparison -------------------------------------------------

@dataclass
class EnsembleComparison:
    """Two-sample comparison of means and variances."""

    mean_a: float
    mean_b: float
    mean_diff: float
    mean_se: float
    var_a: float
    var_b: float
    var_diff: float
    var_se: float
    z_crit: float
    passed: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _var_se(v):
    # large-sample SE of the unbiased variance: sqrt((m4 - s^4) / N)
    m = v.mean()
    c = v - m
    m4 = float(np.mean(c**4))
    s2 = float(np.var(v, ddof=1))
    return s2, math.sqrt(max(m4 - s2 * s2, 0.0) / v.size)


def compare_ensembles(a, b, level: float = 0.99) -> EnsembleComparison:
    """Pass when the ``level`` two-sample intervals for the mean and the
    variance differences both contain zero."""
    from scipy.stats import norm

    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size < MIN_SAMPLES or b.size < MIN_SAMPLES:
        raise DomainError(f"each sample set needs at least {MIN_SAMPLES} values (got {a.size}, {b.size})")
    zc = float(norm.ppf(0.5 + level / 2.0))
    ma, mb = float(a.mean()), float(b.mean())
    mse = math.sqrt(np.var(a, ddof=1) / a.size + np.var(b, ddof=1) / b.size)
    va, sa = _var_se(a)
    vb, sb = _var_se(b)
    vse = math.hypot(sa, sb)
    md, vd = ma - mb, va - vb
    ok_mean = abs(md) <= zc * mse
    ok_var = abs(vd) <= zc * vse
    return EnsembleComparison(ma, mb, md, mse, va, vb, vd, vse, zc, bool(ok_mean and ok_var))

"""Deterministic kernels: heat kernel, Karlin-McGregor and Dyson densities,
the one-point kernel of Dyson Brownian motion, HCIZ and GUE utilities.

Dyson densities are evaluated either by the raw ratio
``Delta(y)/Delta(x) * det[p_t(x_i - y_j)]`` or, near the boundary of the Weyl
chamber, through Newton divided differences of the Gaussian in the ``x``
variables.  Clusters of nearly equal nodes are summed from a Taylor series,
so no 0/0 ratio is ever formed.

The one-point kernel ``K_t(x, y1) = int Q_t(x, y) dy_2..dy_n`` uses the double
contour representation of the Dyson correlation kernel with the ``1/(w - z)``
pole removed by an integration by parts in ``z`` and ``w``.  Without that pole
the closed contour around the ``x_i`` can be opened into two horizontal lines
``Im z = +-d`` and the vertical line can pass through ``y1``.  Every term of the
integrand then factorizes into a ``z`` part and a ``w`` part, so each
evaluation costs a handful of one-dimensional trapezoidal sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

from .errors import DomainError, QuadratureError

__all__ = [
    "WeylPoint",
    "ContourSpec",
    "heat_kernel",
    "heat_kernel_dx",
    "vandermonde",
    "c_nt",
    "km_density",
    "dyson_density",
    "dyson_density_boundary",
    "dyson_mass",
    "one_point_kernel",
    "one_point_kernel_dx",
    "kernel_l2",
    "hciz_exact",
    "hciz_mc",
    "hciz_bound_violations",
    "haar_unitary",
    "sample_gue",
    "sample_gue_matrices",
    "gue_corner_probability",
    "erf_series",
    "exp_erf",
    "weyl_extreme_inequalities",
    "BETA_2",
    "BETA_2_SE",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Relative gap (in units of sqrt(t)) below which the confluent route is used.
CONFLUENT_RATIO = 0.25
_TAYLOR_TERMS = 24

# Monte Carlo estimate of beta(2) = P_GUE[both eigenvalues >= 0] / 2 from
# gue_corner_probability(2, 10**6, seed=20240601); frozen reference value.
BETA_2 = 0.0454205
BETA_2_SE = 0.0001437


def _scalar_or_array(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


def heat_kernel(t, r):
    """Gaussian heat kernel ``(2 pi t)^{-1/2} exp(-r^2 / 2t)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("heat kernel requires t > 0")
    r = np.asarray(r, dtype=float)
    return _scalar_or_array(np.exp(-(r * r) / (2.0 * t)) / np.sqrt(2.0 * np.pi * t))


def heat_kernel_dx(t, r):
    """Derivative of the heat kernel in its space argument."""
    r = np.asarray(r, dtype=float)
    return _scalar_or_array(-(r / t) * heat_kernel(t, r))


def _permutation_parity(order):
    order = list(order)
    seen = [False] * len(order)
    parity = 1
    for i in range(len(order)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = order[j]
            length += 1
        if length % 2 == 0:
            parity = -parity
    return parity


@dataclass(frozen=True, eq=False)
class WeylPoint:
    """Point of the Weyl chamber ``x_1 >= ... >= x_n``.

    ``parity`` is the sign of the permutation that sorted the user's input when
    the point came from :meth:`from_unsorted`; antisymmetric quantities such as
    :func:`km_density` use it to return the value at the original ordering.
    """

    coords: np.ndarray
    parity: int = 1

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).ravel()
        if c.size == 0:
            raise DomainError("a WeylPoint needs at least one coordinate")
        if not np.all(np.isfinite(c)):
            raise DomainError("coordinates must be finite")
        if np.any(c[:-1] < c[1:]):
            raise DomainError(f"coordinates must be non-increasing, got {c}")
        c.flags.writeable = False
        object.__setattr__(self, "coords", c)
        if self.parity not in (1, -1):
            raise DomainError("parity must be +1 or -1")

    @classmethod
    def from_unsorted(cls, values) -> "WeylPoint":
        v = np.array(values, dtype=float).ravel()
        order = np.argsort(-v, kind="stable")
        return cls(v[order], _permutation_parity(order))

    @property
    def n(self) -> int:
        return self.coords.size

    @cached_property
    def vandermonde(self) -> float:
        return float(vandermonde(self.coords))

    def __len__(self):
        return self.n

    def __iter__(self):
        return iter(self.coords.tolist())

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def __repr__(self):
        return f"WeylPoint({self.coords.tolist()})"


def _coords(x):
    if isinstance(x, WeylPoint):
        return x.coords, x.parity
    return np.asarray(x, dtype=float), 1


def vandermonde(x):
    """``prod_{i<j} (x_i - x_j)`` over the last axis (1 for a single coordinate)."""
    v, _ = _coords(x)
    v = np.atleast_1d(v)
    n = v.shape[-1]
    out = np.ones(v.shape[:-1])
    for i in range(n):
        for j in range(i + 1, n):
            out = out * (v[..., i] - v[..., j])
    return _scalar_or_array(out)


def c_nt(n: int, t: float) -> float:
    """``(prod_{i=1}^{n-1} i!)^{-1} t^{-n(n-1)/2}``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if t <= 0:
        raise DomainError("t must be positive")
    prod = 1.0
    for i in range(1, n):
        prod *= math.factorial(i)
    return 1.0 / prod * t ** (-n * (n - 1) / 2.0)


def _heat_matrix(t, x, y):
    # y: (..., n) -> (..., n, n) with entries p_t(x_i - y_j)
    return heat_kernel(t, x[:, None] - y[..., None, :])


def km_density(t: float, x, y):
    """Karlin-McGregor density ``det[p_t(x_i - y_j)]``.

    ``y`` may carry leading batch axes.  Inputs built with
    :meth:`WeylPoint.from_unsorted` are evaluated at their original ordering.
    """
    xv, px = _coords(x)
    yv, py = _coords(y)
    xv = np.atleast_1d(xv)
    yv = np.atleast_1d(yv)
    if xv.shape[-1] != yv.shape[-1]:
        raise DomainError("dimension mismatch between x and y")
    if t <= 0:
        raise DomainError("t must be positive")
    return _scalar_or_array(px * py * np.linalg.det(_heat_matrix(t, xv, yv)))


# -- divided differences ------------------------------------------------------

def _complete_homogeneous(offsets, K):
    """``h_0..h_K`` of the offsets (first axis) via ``prod 1/(1 - d z)``."""
    h = [1.0] + [0.0] * K
    for d in offsets:
        for k in range(1, K + 1):
            h[k] = h[k] + d * h[k - 1]
    return h


def divided_differences(nodes, taylor, tol):
    """Newton divided differences ``f[x_1..x_k]`` for ``k = 1..n``.

    Parameters
    ----------
    nodes : array, shape (n,)
        Sorted nodes (clusters must be contiguous).
    taylor : callable
        ``taylor(c, L)`` returns an array of shape ``(L+1, ...)`` holding the
        Taylor coefficients ``f^{(l)}(c)/l!``.
    tol : float
        Node spans up to ``tol`` are evaluated from the Taylor series about the
        cluster mean instead of by the difference recursion.

    Returns
    -------
    list of arrays, the ``k``-th being ``f[x_1..x_{k+1}]``.
    """
    x = np.asarray(nodes, dtype=float)
    n = x.size
    table = {}
    for span in range(n):
        for i in range(n - span):
            j = i + span
            if span == 0:
                table[i, j] = taylor(x[i], 0)[0]
            elif abs(x[i] - x[j]) <= tol:
                c = float(np.mean(x[i : j + 1]))
                coeff = taylor(c, span + _TAYLOR_TERMS)
                h = _complete_homogeneous(x[i : j + 1] - c, _TAYLOR_TERMS)
                acc = coeff[span] * h[0]
                for k in range(1, _TAYLOR_TERMS + 1):
                    acc = acc + coeff[span + k] * h[k]
                table[i, j] = acc
            else:
                table[i, j] = (table[i + 1, j] - table[i, j - 1]) / (x[j] - x[i])
    return [table[0, k] for k in range(n)]


def _gauss_taylor(t, yv):
    """Taylor coefficients of ``x -> p_t(x - y)`` for each ``y`` in ``yv``."""

    def taylor(c, L):
        r = c - yv
        out = np.empty((L + 1,) + np.shape(r))
        out[0] = 1.0
        if L >= 1:
            out[1] = -r / t
        for l in range(1, L):
            out[l + 1] = -(r * out[l] + out[l - 1]) / ((l + 1) * t)
        return out * heat_kernel(t, r)

    return taylor


def _exp_taylor(yv):
    """Taylor coefficients of ``x -> exp(x y)``."""

    def taylor(c, L):
        out = np.empty((L + 1,) + np.shape(yv))
        out[0] = np.exp(c * yv)
        for l in range(L):
            out[l + 1] = out[l] * yv / (l + 1)
        return out

    return taylor


def _confluent_det_over_vandermonde(nodes, taylor, tol, batch_shape, n):
    """``det[f_{y_j}(x_i)] / Delta(x)`` through divided-difference rows."""
    rows = divided_differences(nodes, taylor, tol)  # each of shape batch + (n,)
    D = np.stack(rows, axis=-2)  # batch + (n, n): row i = dd order i, column j
    sign = -1.0 if (n * (n - 1) // 2) % 2 else 1.0
    return sign * np.linalg.det(D)


def _sorted_desc(v):
    return np.sort(np.asarray(v, dtype=float))[::-1]


def dyson_density(t: float, x, y):
    """Dyson transition density ``Q_t(x, y)``, symmetric in both arguments.

    ``y`` may carry leading batch axes (last axis = coordinates).  Near the
    chamber boundary in ``x`` the divided-difference route is used, and a fully
    collapsed ``x = a 1`` is delegated to :func:`dyson_density_boundary`.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    xs = _sorted_desc(_coords(x)[0])
    yv = np.asarray(_coords(y)[0], dtype=float)
    n = xs.size
    if yv.shape[-1] != n:
        raise DomainError("dimension mismatch between x and y")
    if n == 1:
        return heat_kernel(t, xs[0] - yv[..., 0])
    if xs[0] == xs[-1]:
        return dyson_density_boundary(t, xs[0], yv)
    scale = math.sqrt(t)
    gap_x = float(np.min(xs[:-1] - xs[1:]))
    if yv.ndim == 1:
        ys = _sorted_desc(yv)
        gap_y = float(np.min(ys[:-1] - ys[1:]))
        if gap_y < gap_x and gap_y < CONFLUENT_RATIO * scale:
            # det/(Delta(x) Delta(y)) is symmetric in x and y: take the
            # divided differences over the closer-spaced argument
            ratio = _confluent_det_over_vandermonde(ys, _gauss_taylor(t, xs), CONFLUENT_RATIO * scale, (), n)
            return float(vandermonde(ys) ** 2 * ratio / vandermonde(xs))
    vy = np.asarray(vandermonde(yv))
    if gap_x >= CONFLUENT_RATIO * scale:
        ker = np.linalg.det(_heat_matrix(t, xs, yv))
        return _scalar_or_array(vy / vandermonde(xs) * ker)
    ratio = _confluent_det_over_vandermonde(
        xs, _gauss_taylor(t, yv), CONFLUENT_RATIO * scale, yv.shape[:-1], n
    )
    return _scalar_or_array(vy * ratio)


def dyson_density_boundary(t: float, a: float, y):
    """``Q_t(a 1, y) = c_{n,t} Delta(y)^2 prod_i p_t(y_i - a)``."""
    yv = np.asarray(_coords(y)[0], dtype=float)
    n = yv.shape[-1]
    vy = np.asarray(vandermonde(yv))
    return _scalar_or_array(c_nt(n, t) * vy**2 * np.prod(heat_kernel(t, yv - a), axis=-1))


def dyson_mass(t: float, x, nodes: int | None = None, half_width: float = 9.0):
    """``int_{W_n} Q_t(x, y) dy`` by tensor Gauss-Legendre quadrature.

    The symmetric extension is integrated over a box around ``x`` and divided
    by ``n!`` (the chamber is one of ``n!`` congruent images).
    """
    xs = _sorted_desc(_coords(x)[0])
    n = xs.size
    if nodes is None:
        nodes = max(40, int(math.ceil(2.6 * (xs[0] - xs[-1] + 2 * half_width))))
    s = math.sqrt(t)
    lo, hi = xs[-1] - half_width * s, xs[0] + half_width * s
    g, w = np.polynomial.legendre.leggauss(nodes)
    pts = 0.5 * (hi - lo) * g + 0.5 * (hi + lo)
    wts = 0.5 * (hi - lo) * w
    mesh = np.stack(np.meshgrid(*([pts] * n), indexing="ij"), axis=-1)
    wmesh = np.ones([nodes] * n)
    for k in range(n):
        shape = [1] * n
        shape[k] = nodes
        wmesh = wmesh * wts.reshape(shape)
    vals = dyson_density(t, xs, mesh.reshape(-1, n)).reshape([nodes] * n)
    return float(np.sum(vals * wmesh) / math.factorial(n))


# -- contour kernel -----------------------------------------------------------

@dataclass(frozen=True)
class ContourSpec:
    """Quadrature parameters of the contour kernel.

    Attributes
    ----------
    d : float
        Half-height of the contour: the two horizontal lines are ``Im z = +-d``.
    margin : float
        Extra length added past the point where the Gaussian factor on the
        horizontal lines drops below ``tail``.
    n_gamma, n_vertical : int
        Initial trapezoid node counts on the horizontal and vertical lines.
    v_max : float
        Truncation of the vertical line ``w = y1 + i s``, ``|s| <= v_max``.
    tol : float
        Convergence tolerance between successive node doublings.
    tail : float
        Gaussian tail level used for truncation.
    max_doublings : int
        Node doublings allowed before :class:`QuadratureError`.
    """

    d: float = 1.0
    margin: float = 1.0
    n_gamma: int = 256
    n_vertical: int = 128
    v_max: float = 10.0
    tol: float = 1e-11
    tail: float = 1e-16
    max_doublings: int = 6

    def __post_init__(self):
        if self.d <= 0 or self.margin <= 0:
            raise DomainError("d and margin must be positive")
        if math.exp(-self.v_max**2 / 2) >= self.tail:
            raise DomainError("v_max too small for the requested Gaussian tail")

    @property
    def line_half_length(self) -> float:
        return math.sqrt(self.d**2 + 2.0 * math.log(1.0 / self.tail)) + self.margin


def _trapezoid(a, b, n):
    u = np.linspace(a, b, n + 1)
    w = np.full(n + 1, (b - a) / n)
    w[0] *= 0.5
    w[-1] *= 0.5
    return u, w


def _contour_blocks(xs, spec: ContourSpec, ng: int, nv: int):
    """One-dimensional factors of the scaled kernel (t = 1, y1 = 0).

    ``xs`` has shape (M, n).  Returns ``(W0, W1, Wj, Z0, Z1, Zj)`` with ``Wj``
    and ``Zj`` of shape (M, n).
    """
    M, n = xs.shape
    U = spec.line_half_length
    u, wu = _trapezoid(-U, U, ng)
    s, ws = _trapezoid(-spec.v_max, spec.v_max, nv)

    # vertical line w = i s, dw = i ds
    w = 1j * s
    ew = np.exp(-0.5 * s * s) * ws * 1j
    diff_w = w[None, :, None] - xs[:, None, :]  # (M, nv, n)
    Pw = np.prod(diff_w, axis=-1)
    W0 = np.sum(Pw * ew, axis=-1)
    W1 = np.sum(w * Pw * ew, axis=-1)
    Wj = np.empty((M, n), dtype=complex)
    for j in range(n):
        others = np.delete(diff_w, j, axis=-1)
        Wj[:, j] = np.sum(np.prod(others, axis=-1) * ew, axis=-1)

    # horizontal lines: bottom one left to right, top one right to left
    Z0 = np.zeros(M, dtype=complex)
    Z1 = np.zeros(M, dtype=complex)
    Zj = np.zeros((M, n), dtype=complex)
    for sign, z in ((1.0, u - 1j * spec.d), (-1.0, u + 1j * spec.d)):
        ez = sign * np.exp(-0.5 * z * z) * wu
        diff_z = z[None, :, None] - xs[:, None, :]
        base = ez / np.prod(diff_z, axis=-1)
        Z0 += np.sum(base, axis=-1)
        Z1 += np.sum(z * base, axis=-1)
        Zj += np.sum(base[:, :, None] / diff_z, axis=1)
    return W0, W1, Wj, Z0, Z1, Zj


def _scaled_inputs(t, x, y1):
    if t <= 0:
        raise DomainError("t must be positive")
    xs = np.asarray(_coords(x)[0], dtype=float).ravel()
    if not np.all(np.isfinite(xs)):
        raise DomainError("x must be finite")
    y = np.atleast_1d(np.asarray(y1, dtype=float))
    st = math.sqrt(t)
    return (xs[None, :] - y.ravel()[:, None]) / st, y.shape, np.ndim(y1) == 0


def _converged(f, spec: ContourSpec):
    ng, nv = spec.n_gamma, spec.n_vertical
    prev = f(ng, nv)
    for _ in range(spec.max_doublings):
        ng, nv = 2 * ng, 2 * nv
        cur = f(ng, nv)
        err = np.max(np.abs(cur - prev))
        if err <= spec.tol * max(1.0, float(np.max(np.abs(cur)))):
            return cur
        prev = cur
    raise QuadratureError(f"contour quadrature did not converge (last change {err:.3g})")


def one_point_kernel(t: float, x, y1, spec: ContourSpec | None = None):
    """``K_t(x, y1) = int_{R^{n-1}} Q_t(x, (y1, y_2..y_n)) dy_2..dy_n``.

    ``y1`` may be an array; the result has its shape.
    """
    spec = spec or ContourSpec()
    xs, shape, scalar = _scaled_inputs(t, x, y1)
    n = xs.shape[1]

    def evaluate(ng, nv):
        W0, W1, Wj, Z0, Z1, Zj = _contour_blocks(xs, spec, ng, nv)
        total = W1 * Z0 + W0 * Z1 - np.sum(xs * Wj * Zj, axis=-1)
        return (total / (4.0 * math.pi**2)).real

    val = _converged(evaluate, spec) * math.factorial(n - 1) / math.sqrt(t)
    return float(val[0]) if scalar else val.reshape(shape)


def one_point_kernel_dx(t: float, x, j: int, y1, spec: ContourSpec | None = None):
    """``d K_t(x, y1) / d x_j`` for a 1-based coordinate index ``j``."""
    spec = spec or ContourSpec()
    xs, shape, scalar = _scaled_inputs(t, x, y1)
    n = xs.shape[1]
    if not 1 <= j <= n:
        raise DomainError(f"j must lie in 1..{n}")

    def evaluate(ng, nv):
        _, _, Wj, _, _, Zj = _contour_blocks(xs, spec, ng, nv)
        return (-Wj[:, j - 1] * Zj[:, j - 1] / (4.0 * math.pi**2)).real

    val = _converged(evaluate, spec) * math.factorial(n - 1) / t
    return float(val[0]) if scalar else val.reshape(shape)


def kernel_l2(t: float, x, spec: ContourSpec | None = None, points_per_unit: int = 24, half_width: float = 9.0):
    """``int_R K_t(x, y)^2 dy`` by the trapezoidal rule in ``y``."""
    xs = _sorted_desc(_coords(x)[0])
    s = math.sqrt(t)
    lo, hi = xs[-1] - half_width * s, xs[0] + half_width * s
    m = max(64, int(math.ceil((hi - lo) / s * points_per_unit)))
    y, w = _trapezoid(lo, hi, m)
    k = one_point_kernel(t, xs, y, spec)
    return float(np.sum(w * k * k))


# -- HCIZ ---------------------------------------------------------------------

def hciz_exact(x, y):
    """``det[exp(x_i y_j)] / (Delta(x) Delta(y))`` including confluent limits.

    Either argument may have coincident coordinates (not both).
    """
    xs = _sorted_desc(_coords(x)[0])
    ys = _sorted_desc(_coords(y)[0])
    n = xs.size
    if ys.size != n:
        raise DomainError("dimension mismatch")
    if n == 1:
        return math.exp(xs[0] * ys[0])

    def min_gap(v):
        return float(np.min(v[:-1] - v[1:]))

    if min_gap(ys) < min_gap(xs):
        xs, ys = ys, xs  # the formula is symmetric under x <-> y
    if min_gap(ys) == 0.0:
        if np.all(ys == ys[0]) and np.all(xs == xs[0]):
            return c_nt(n, 1.0) * math.exp(n * xs[0] * ys[0])
        raise DomainError("both arguments are confluent")
    scale = 1.0 / max(1.0, float(np.max(np.abs(ys))))
    ratio = _confluent_det_over_vandermonde(
        xs, _exp_taylor(ys), CONFLUENT_RATIO * scale, (), n
    )
    return float(ratio / vandermonde(ys))


def haar_unitary(n: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitaries from QR of complex Ginibre matrices.

    The phases of ``diag(R)`` are divided out so the law is exactly Haar.
    """
    z = (rng.standard_normal((samples, n, n)) + 1j * rng.standard_normal((samples, n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[:, None, :]


def _tr_yuxu(xs, ys, U):
    absu2 = np.abs(U) ** 2
    return np.einsum("i,sij,j->s", ys, absu2, xs)


def hciz_mc(x, y, samples: int, seed: int):
    """Monte Carlo of ``c_n int exp(Tr(Y U X U^*)) dU`` over Haar unitaries.

    Returns ``(estimate, std_error)``; for ``n = 1`` the value is exact.
    """
    xs = _sorted_desc(_coords(x)[0])
    ys = _sorted_desc(_coords(y)[0])
    n = xs.size
    if n == 1:
        return math.exp(xs[0] * ys[0]), 0.0
    rng = np.random.default_rng(seed)
    vals = np.empty(samples)
    chunk = 20000
    for start in range(0, samples, chunk):
        m = min(chunk, samples - start)
        vals[start : start + m] = np.exp(_tr_yuxu(xs, ys, haar_unitary(n, m, rng)))
    c = c_nt(n, 1.0)
    return float(c * vals.mean()), float(c * vals.std(ddof=1) / math.sqrt(samples))


def hciz_bound_violations(x, y, samples: int, seed: int) -> int:
    """Count samples with ``exp(-Tr(D_y - U D_x U^*)^2 / 2) > prod exp(-(y_i - x_i)^2 / 2)``."""
    xs = _sorted_desc(_coords(x)[0])
    ys = _sorted_desc(_coords(y)[0])
    rng = np.random.default_rng(seed)
    U = haar_unitary(xs.size, samples, rng)
    lhs = -0.5 * (np.sum(xs**2) + np.sum(ys**2) - 2.0 * _tr_yuxu(xs, ys, U))
    rhs = -0.5 * np.sum((ys - xs) ** 2)
    slack = 1e-12 * (1.0 + np.sum(xs**2) + np.sum(ys**2))
    return int(np.sum(lhs > rhs + slack))


# -- GUE ----------------------------------------------------------------------

def sample_gue_matrices(n: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Matrices with density proportional to ``exp(-Tr Y^2 / 2)``.

    Diagonal entries are N(0, 1); real and imaginary parts of off-diagonal
    entries are N(0, 1/2).
    """
    a = rng.standard_normal((samples, n, n))
    b = rng.standard_normal((samples, n, n))
    upper = np.triu((a + 1j * b) / math.sqrt(2.0), k=1)
    diag = np.einsum("sii->si", a)
    h = upper + np.conj(np.swapaxes(upper, -1, -2))
    idx = np.arange(n)
    h[:, idx, idx] = diag
    return h


def sample_gue(n: int, seed: int) -> WeylPoint:
    """Sorted eigenvalues of one GUE draw."""
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = np.random.default_rng(seed)
    ev = np.linalg.eigvalsh(sample_gue_matrices(n, 1, rng)[0])
    return WeylPoint(ev[::-1])


def gue_corner_probability(n: int, samples: int, seed: int, return_se: bool = False):
    """Monte Carlo of ``beta(n) = P[all eigenvalues >= 0] / 2``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 100000
    for start in range(0, samples, chunk):
        m = min(chunk, samples - start)
        ev = np.linalg.eigvalsh(sample_gue_matrices(n, m, rng))
        hits += int(np.sum(ev[:, 0] >= 0))
    p = hits / samples
    beta = p / 2.0
    if return_se:
        return beta, math.sqrt(p * (1 - p) / samples) / 2.0
    return beta


def weyl_extreme_inequalities(A: np.ndarray, B: np.ndarray, tol: float = 1e-10) -> bool:
    """Check ``phi_1(A+B) <= phi_1(A)+phi_1(B)`` and ``phi_n(A)+phi_n(B) <= phi_n(A+B)``.

    ``phi_1`` is the largest and ``phi_n`` the smallest eigenvalue.
    """
    ea, eb, es = (np.linalg.eigvalsh(m) for m in (A, B, A + B))
    return bool(es[-1] <= ea[-1] + eb[-1] + tol and ea[0] + eb[0] <= es[0] + tol)


# -- error-function series ----------------------------------------------------

def erf_series(x: float, terms: int = 60) -> float:
    """Partial sum ``sum_{k=1}^{terms} x^{k-1} / Gamma((k+1)/2)``."""
    k = np.arange(1, terms + 1)
    logs = (k - 1) * math.log(abs(x)) if x != 0 else None
    if x == 0:
        return float(1.0 / special.gamma(1.0))
    mags = np.exp(logs - special.gammaln((k + 1) / 2.0))
    signs = np.sign(x) ** (k - 1)
    return float(np.sum(signs * mags))


def exp_erf(x):
    """``exp(x^2) (1 + erf(x))`` evaluated without overflow in the product."""
    x = np.asarray(x, dtype=float)
    return _scalar_or_array(2.0 * np.exp(x * x) - special.erfcx(x))

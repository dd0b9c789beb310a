import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from mlshe import kernels
from mlshe.errors import DomainError
from mlshe.kernels import (
    BETA_2,
    BETA_2_SE,
    WeylPoint,
    c_nt,
    dyson_density,
    dyson_density_boundary,
    dyson_mass,
    heat_kernel,
    km_density,
    one_point_kernel,
    one_point_kernel_dx,
    vandermonde,
)

P1 = lambda r: math.exp(-r * r / 2) / math.sqrt(2 * math.pi)


def sorted_point(draw_list):
    return np.sort(np.asarray(draw_list))[::-1]


# -- elementary formulas -------------------------------------------------------

def test_heat_kernel_values():
    assert heat_kernel(1.0, 0.0) == pytest.approx(0.3989423, abs=1e-7)
    assert heat_kernel(4.0, 2.0) == pytest.approx(0.5 * heat_kernel(1.0, 1.0), rel=1e-15)
    assert heat_kernel(0.5, 0.0) == pytest.approx(0.5641896, abs=1e-7)
    with pytest.raises(DomainError):
        heat_kernel(0.0, 1.0)


def test_vandermonde_examples():
    assert vandermonde([2.5]) == 1.0
    assert vandermonde([3.0, 1.0, 0.0]) == 6.0
    assert vandermonde([1.0, 1.0]) == 0.0


def test_weyl_point_sorting_and_parity():
    with pytest.raises(DomainError):
        WeylPoint([0.0, 1.0])
    p = WeylPoint.from_unsorted([0.0, 2.0, 1.0])
    assert p.coords.tolist() == [2.0, 1.0, 0.0]
    assert p.parity == 1  # a 3-cycle is even
    q = WeylPoint.from_unsorted([0.0, 1.0])
    assert q.parity == -1
    assert WeylPoint([3.0, 1.0, 0.0]).vandermonde >= 0


def test_c_nt():
    assert c_nt(1, 3.7) == 1.0
    assert c_nt(2, 2.0) == pytest.approx(0.5)
    assert c_nt(3, 1.0) == pytest.approx(0.5)


def test_km_density():
    assert km_density(0.7, [0.3], [-0.4]) == pytest.approx(heat_kernel(0.7, 0.7))
    expected = (1 - math.exp(-1)) / (2 * math.pi)
    assert km_density(1.0, [1.0, 0.0], [1.0, 0.0]) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.10061, abs=1e-5)
    y = WeylPoint.from_unsorted([0.0, 1.0])
    assert km_density(1.0, [1.0, 0.0], y) == pytest.approx(-expected, rel=1e-14)


# -- Dyson density -------------------------------------------------------------

def test_dyson_normalization_n2():
    assert dyson_mass(1.0, [1.0, 0.0]) == pytest.approx(1.0, abs=1e-3)


def test_dyson_normalization_n3():
    assert dyson_mass(1.0, [0.8, 0.1, -0.6]) == pytest.approx(1.0, abs=1e-3)


def test_dyson_mass_independent_route():
    # adaptive integration over the chamber y1 > y2
    f = lambda y2, y1: dyson_density(1.0, [1.0, 0.0], [y1, y2])
    val, _ = integrate.dblquad(f, -9, 10, lambda y1: -9, lambda y1: y1, epsabs=1e-10)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_dyson_scaling_example():
    x, y = np.array([0.9, -0.3]), np.array([1.4, 0.2])
    assert dyson_density(4.0, x, y) == pytest.approx(0.25 * dyson_density(1.0, x / 2, y / 2), rel=1e-13)


def test_boundary_value():
    # c_{2,1} Delta(y)^2 p_1(1) p_1(-1) with Delta(y) = 2
    expected = 4 * P1(1.0) ** 2
    assert expected == pytest.approx(0.2341993, abs=1e-7)
    assert dyson_density(1.0, [0.0, 0.0], [1.0, -1.0]) == pytest.approx(expected, rel=1e-13)
    assert dyson_density_boundary(1.0, 0.0, [1.0, -1.0]) == pytest.approx(expected, rel=1e-14)


def test_boundary_n1():
    assert dyson_density_boundary(0.6, 0.2, [1.1]) == pytest.approx(heat_kernel(0.6, 0.9))


def test_boundary_is_limit_of_interior():
    y = [0.7, -0.4]
    target = dyson_density_boundary(1.0, 0.0, y)
    # the density is even in eps, so Richardson on eps^2 removes the leading term
    e = [0.08, 0.04, 0.02]
    v = [float(km_density(1.0, [a, -a], y) * vandermonde(y) / vandermonde([a, -a])) for a in e]
    r1 = [(4 * v[k + 1] - v[k]) / 3 for k in range(2)]
    r2 = (16 * r1[1] - r1[0]) / 15
    assert r2 == pytest.approx(target, abs=1e-6)


def test_near_confluent_matches_boundary():
    y = [0.5, -0.2, -1.0]
    base = dyson_density_boundary(1.0, 0.3, y)
    near = dyson_density(1.0, [0.3 + 1e-7, 0.3, 0.3 - 1e-7], y)
    assert near == pytest.approx(base, rel=1e-10)


@given(
    t=st.floats(0.05, 5.0),
    x=st.lists(st.floats(-3, 3), min_size=2, max_size=3, unique=True),
    y=st.lists(st.floats(-3, 3), min_size=2, max_size=3, unique=True),
)
def test_scaling_property(t, x, y):
    n = min(len(x), len(y))
    x, y = sorted_point(x[:n]), sorted_point(y[:n])
    if np.min(x[:-1] - x[1:]) < 1e-3 or np.min(y[:-1] - y[1:]) < 1e-3:
        return
    q = dyson_density(t, x, y)
    s = math.sqrt(t)
    ref = t ** (-n / 2) * dyson_density(1.0, x / s, y / s)
    assert q == pytest.approx(ref, rel=1e-10, abs=1e-300)


@given(y=st.lists(st.floats(-3, 3), min_size=3, max_size=3, unique=True))
def test_symmetric_in_y(y):
    x = [1.0, 0.2, -0.5]
    y = np.array(y)
    vals = [dyson_density(1.3, x, y[list(p)]) for p in [(0, 1, 2), (1, 0, 2), (2, 1, 0)]]
    assert vals[1] == pytest.approx(vals[0], rel=1e-12, abs=1e-300)
    assert vals[2] == pytest.approx(vals[0], rel=1e-12, abs=1e-300)


def test_symmetrized_extension_mass():
    # over all of R^2 the symmetric extension integrates to 2!
    f = lambda y2, y1: dyson_density(0.8, [0.5, -0.5], [y1, y2])
    val, _ = integrate.dblquad(f, -9, 9, -9, 9, epsabs=1e-9)
    assert val == pytest.approx(2.0, abs=1e-6)


# -- contour kernel -----------------------------------------------------------

def test_kernel_n1_is_heat_kernel():
    y = np.linspace(-3, 3, 13)
    assert np.max(np.abs(one_point_kernel(0.7, [0.4], y) - heat_kernel(0.7, 0.4 - y))) < 1e-8


def test_kernel_mass_n2():
    y = np.linspace(-10, 11, 1401)
    k = one_point_kernel(1.0, [1.0, 0.0], y)
    assert np.sum(k) * (y[1] - y[0]) == pytest.approx(2.0, abs=1e-3)


def test_kernel_matches_y2_quadrature():
    f = lambda y2: dyson_density(1.0, [1.0, 0.0], [0.5, y2])
    direct, _ = integrate.quad(f, -12, 12, points=[0.5], epsabs=1e-12, limit=200)
    assert one_point_kernel(1.0, [1.0, 0.0], 0.5) == pytest.approx(direct, abs=1e-4)


def test_kernel_scaling_in_t():
    x = np.array([0.6, -0.6])
    t = 2.5
    s = math.sqrt(t)
    assert one_point_kernel(t, x, 0.3) == pytest.approx(one_point_kernel(1.0, x / s, 0.3 / s) / s, rel=1e-8)


def test_kernel_l2_scaling():
    x = np.array([0.6, -0.6])
    t = 2.0
    lhs = kernels.kernel_l2(t, x)
    rhs = kernels.kernel_l2(1.0, x / math.sqrt(t)) / math.sqrt(t)
    assert lhs == pytest.approx(rhs, rel=1e-6)


def test_kernel_derivative_n1():
    x, y, t = 0.8, -0.1, 0.9
    exact = -((x - y) / t) * heat_kernel(t, x - y)
    assert one_point_kernel_dx(t, [x], 1, y) == pytest.approx(exact, abs=1e-6)


@pytest.mark.parametrize("j", [1, 2])
def test_kernel_derivative_finite_difference(j):
    x = np.array([1.0, 0.0])
    h = 1e-4
    e = np.zeros(2)
    e[j - 1] = h
    fd = (one_point_kernel(1.0, x + e, 0.4) - one_point_kernel(1.0, x - e, 0.4)) / (2 * h)
    an = one_point_kernel_dx(1.0, x, j, 0.4)
    assert an == pytest.approx(fd, rel=1e-5)


def test_kernel_derivative_translation_invariance():
    x = np.array([0.9, -0.4])
    h = 0.7
    for j in (1, 2):
        a = one_point_kernel_dx(1.0, x + h, j, 0.2 + h)
        b = one_point_kernel_dx(1.0, x, j, 0.2)
        assert a == pytest.approx(b, abs=1e-8)


# -- HCIZ ------------------------------------------------------------------------

def test_hciz_n1_exact():
    assert kernels.hciz_mc([0.7], [1.3], 10, 0) == (math.exp(0.7 * 1.3), 0.0)


def test_hciz_target():
    e = math.e
    assert kernels.hciz_exact([1.0, 0.0], [1.0, 0.0]) == pytest.approx(e - 1, rel=1e-14)
    assert kernels.hciz_exact([0.0, 0.0], [1.0, 0.0]) == pytest.approx(1.0, rel=1e-13)


def test_hciz_confluent_is_limit():
    y = [0.8, -0.3]
    eps = 1e-4
    near = kernels.hciz_exact([eps, -eps], y)
    assert near == pytest.approx(kernels.hciz_exact([0.0, 0.0], y), rel=1e-7)


def test_hciz_mc_within_3se():
    est, se = kernels.hciz_mc([1.0, 0.0], [1.0, 0.0], 10**5, 1)
    assert abs(est - (math.e - 1)) < 3 * se


def test_haar_unitary_is_unitary(rng):
    u = kernels.haar_unitary(3, 50, rng)
    eye = np.einsum("sij,skj->sik", u, np.conj(u))
    assert np.allclose(eye, np.eye(3), atol=1e-12)


@given(x=st.lists(st.floats(-2, 2), min_size=3, max_size=3), y=st.lists(st.floats(-2, 2), min_size=3, max_size=3),
       seed=st.integers(0, 1000))
def test_hciz_uniform_bound(x, y, seed):
    assert kernels.hciz_bound_violations(x, y, 200, seed) == 0


# -- GUE and Weyl ----------------------------------------------------------------

def test_gue_n1_standard_normal():
    v = np.array([kernels.sample_gue(1, s).coords[0] for s in range(4000)])
    assert abs(v.var(ddof=1) - 1.0) < 4 * math.sqrt(2 / 4000)


def test_gue_trace_centered():
    tr = np.array([kernels.sample_gue(3, s).coords.sum() for s in range(3000)])
    # Var(trace) = n for unit diagonal variance
    assert abs(tr.mean()) < 4 * math.sqrt(3 / 3000)
    assert tr.var(ddof=1) == pytest.approx(3.0, rel=0.1)


def test_gue_eigenvalues_sorted():
    p = kernels.sample_gue(5, 3)
    assert np.all(np.diff(p.coords) <= 0)


def test_corner_probability_n1():
    beta, se = kernels.gue_corner_probability(1, 20000, 5, return_se=True)
    assert abs(beta - 0.25) < 3 * se


def test_corner_probability_n2_range():
    beta = kernels.gue_corner_probability(2, 20000, 6)
    assert 0 < beta < 0.25


def test_frozen_beta2_reproduces():
    beta, se = kernels.gue_corner_probability(2, 10**5, 99, return_se=True)
    assert abs(beta - BETA_2) < 3 * math.hypot(se, BETA_2_SE)


@given(seed=st.integers(0, 10**6), n=st.integers(1, 6))
def test_weyl_inequalities(seed, n):
    rng = np.random.default_rng(seed)
    A = kernels.sample_gue_matrices(n, 1, rng)[0]
    B = kernels.sample_gue_matrices(n, 1, rng)[0] * 3
    assert kernels.weyl_extreme_inequalities(A, B)


# -- error function series ----------------------------------------------------

@given(x=st.floats(-2.5, 2.9))
def test_erf_series_60_terms(x):
    assert kernels.erf_series(x, 60) == pytest.approx(float(kernels.exp_erf(x)), rel=1e-8, abs=1e-8)


def test_erf_series_at_three_needs_more_terms():
    target = float(kernels.exp_erf(3.0))
    assert abs(kernels.erf_series(3.0, 60) - target) / target > 1e-8
    assert kernels.erf_series(3.0, 70) == pytest.approx(target, rel=1e-8)

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from mlshe import kernels, mild
from mlshe.errors import CostGuardError, DomainError, GridError
from mlshe.kernels import heat_kernel
from mlshe.noise import GridSpec, NoiseField, sample_noise, time_reverse
from mlshe.she import solve_she

SID = mild.SymmetricInitialData


@pytest.fixture(scope="module")
def grid2():
    return GridSpec.from_spacing(-2.0, 2.0, 0.2, 0.1, 0.005, "absorbing")


def test_an():
    assert [mild.a_n(n) for n in (1, 2, 3)] == [1.0, 1.0, 0.5]


def test_initial_data_checks():
    with pytest.raises(DomainError, match="symmetric"):
        SID(lambda y: y[..., 0], 2, 10.0)
    with pytest.raises(DomainError, match="bound"):
        SID(lambda y: np.sum(y**2, axis=-1), 2, 1.0)
    ind = SID.indicator(1.0, 2)
    assert ind(np.array([[0.5, -0.5], [1.5, 0.0]])).tolist() == [1.0, 0.0]


# -- J term -------------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3])
def test_j_term_constant(n):
    y = np.linspace(0.5, -0.5, n)
    assert mild.j_term(SID.constant(1.0, n), 0.7, y) == pytest.approx(1.0, abs=1e-3)


def test_j_term_small_time():
    g = SID.product(lambda v: np.exp(-v * v), 2, 1.0)
    y = np.array([0.4, -0.3])
    assert mild.j_term(g, 1e-3, y) == pytest.approx(float(g(y)), abs=5e-2)


def test_j_term_gue_lower_bound():
    # h = M = t = 1 with m = 100: s in [t/2m, t/m], x in (-h - M/m, h + M/m)^2
    g = SID.indicator(1.0, 2)
    m = 100
    c = 1.0 + 1.0 / m
    pts = [(c, c), (c, -c), (-c, -c), (0.0, 0.0), (c, 0.0), (0.5, -0.99)]
    for s in (0.5 / m, 0.75 / m, 1.0 / m):
        for x in pts:
            assert mild.j_term(g, s, x) >= kernels.BETA_2


def test_j_term_errors():
    with pytest.raises(DomainError):
        mild.j_term(SID.constant(1.0, 2), 0.0, [0.0, -1.0])
    with pytest.raises(DomainError):
        mild.j_term(SID.constant(1.0, 2), 1.0, [0.0])


# -- Picard iteration -------------------------------------------------------------

def test_zero_noise_fixed_point(grid2):
    st = mild.picard_solve(SID.constant(1.0, 2), NoiseField.zeros(grid2), 2, k_max=5)
    assert st.d == [0.0] and st.k == 1 and st.converged


def test_zero_data_zero_solution(grid2):
    st = mild.picard_solve(SID.constant(0.0, 2), sample_noise(grid2, 1), 2, k_max=5)
    assert not np.any(st.F)


def test_n1_matches_she():
    g = GridSpec.from_spacing(-3.0, 3.0, 0.1, 0.25, 0.0025, "absorbing")
    nf = sample_noise(g, 4)
    st = mild.picard_solve(SID.product(lambda v: np.exp(-v * v), 1, 1.0), nf, 1, k_max=80)
    u = solve_she(g, nf, lambda x: np.exp(-x * x)).values
    assert st.converged
    assert np.max(np.abs(st.F - u)) < 1e-12


def test_zero_noise_matches_heat_semigroup_in_bulk(grid2):
    # the absorbing edges at distance ~2 leak only a Gaussian tail by t = 0.1
    st = mild.picard_solve(SID.constant(1.0, 2), NoiseField.zeros(grid2), 2, k_max=1)
    assert st.value(grid2.t_max, [0.2, -0.2]) == pytest.approx(1.0, abs=1e-5)


def test_linearity(grid2):
    nf = sample_noise(grid2, 7)
    g1 = SID.constant(1.0, 2)
    g2 = SID.indicator(0.6, 2)
    a = mild.picard_solve(SID(lambda y: 2 * g1(y) - 3 * g2(y), 2, 5.0), nf, 2)
    b = mild.picard_solve(g1, nf, 2)
    c = mild.picard_solve(g2, nf, 2)
    assert np.allclose(a.F, 2 * b.F - 3 * c.F, rtol=0, atol=1e-11 * np.max(np.abs(a.F)))


def test_rerun_bit_identical(grid2):
    nf = sample_noise(grid2, 20240601)
    a = mild.picard_solve(SID.constant(1.0, 2), nf, 2)
    b = mild.picard_solve(SID.constant(1.0, 2), nf, 2, strict_reduce=True)
    assert np.array_equal(a.F, b.F) and a.d == b.d


def test_limit_independent_of_start(grid2):
    nf = sample_noise(grid2, 2)
    a = mild.picard_solve(SID.constant(1.0, 2), nf, 2, tol=1e-13)
    zero = mild.picard_solve(SID.constant(0.0, 2), nf, 2, k_max=1)
    b = mild.picard_solve(SID.constant(1.0, 2), nf, 2, tol=1e-13, m0=zero)
    assert np.max(np.abs(a.F - b.F)) < 1e-11


def test_cost_guard():
    g = GridSpec.from_spacing(-5.0, 5.0, 0.05, 0.1, 0.001)
    with pytest.raises(CostGuardError):
        mild.picard_solve(SID.constant(1.0, 3), NoiseField.zeros(g), 3)
    with pytest.raises(CostGuardError):
        mild.picard_solve(SID.constant(1.0, 4), NoiseField.zeros(g), 4)


def test_d_sequence_nonnegative_and_report(grid2, tmp_path):
    st = mild.picard_solve(SID.constant(1.0, 2), sample_noise(grid2, 3), 2)
    assert all(v >= 0 for v in st.d)
    rep = st.report()
    assert rep["k"] == len(rep["d"]) == st.k
    st.to_csv(tmp_path / "m.csv", times=[grid2.t_max])
    assert (tmp_path / "m.csv").read_text().splitlines()[0] == "t,y1,y2,m"


def test_seeded_d_sequence_passes_decay_check():
    g = GridSpec.from_spacing(-5.0, 5.0, 0.1, 0.5, 5e-4, "absorbing")
    st = mild.picard_solve(SID.constant(1.0, 2), sample_noise(g, 20240601), 2)
    assert st.converged
    assert mild.picard_decay_check(st)["pass"]


# -- decay check ----------------------------------------------------------------------

def test_decay_check_gamma_envelope():
    k = np.arange(20)
    assert mild.picard_decay_check(1.0 / special.gamma(k / 2 + 1))["pass"]


def test_decay_check_geometric_fails():
    assert not mild.picard_decay_check(0.9 ** np.arange(20))["pass"]


def test_decay_check_needs_three():
    with pytest.raises(DomainError):
        mild.picard_decay_check([1.0, 0.5])


# -- chaos expansion ----------------------------------------------------------------

@pytest.fixture(scope="module")
def chaos_grid():
    return GridSpec.from_spacing(-3.0, 3.0, 0.2, 0.5, 0.01)


def test_chaos_zero_noise(chaos_grid):
    sums = mild.chaos_z1(NoiseField.zeros(chaos_grid), 0.5, 0.2, -0.4, k_max=3)
    assert sums == [heat_kernel(0.5, 0.6)] * 4


def test_chaos_guards(chaos_grid):
    nf = NoiseField.zeros(chaos_grid)
    with pytest.raises(CostGuardError):
        mild.chaos_z1(nf, 0.5, 0, 0, k_max=4)
    with pytest.raises(DomainError):
        mild.chaos_z1(nf, 0.5, 0, 0, k_max=-1)


def test_chaos_first_order_mean_zero(chaos_grid):
    inc = [np.diff(mild.chaos_z1(sample_noise(chaos_grid, s), 0.5, 0.0, 0.0, 1))[0] for s in range(300)]
    inc = np.array(inc)
    assert abs(inc.mean()) < 3 * inc.std(ddof=1) / math.sqrt(inc.size)


@given(seed=st.integers(0, 10**6), x=st.floats(-1, 1), y=st.floats(-1, 1))
def test_chaos_time_reversal(seed, x, y):
    g = GridSpec.from_spacing(-3.0, 3.0, 0.2, 0.2, 0.01)
    nf = sample_noise(g, seed)
    a = mild.chaos_z1(nf, 0.2, x, y, 2)
    b = mild.chaos_z1(time_reverse(nf, 0.2), 0.2, y, x, 2)
    assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


# -- restart ---------------------------------------------------------------------------

def test_restart_zero_extra_time(grid2):
    st = mild.picard_solve(SID.constant(1.0, 2), sample_noise(grid2, 1), 2)
    out = mild.restart_solve(st, sample_noise(grid2, 1), 0.05, 0.0)
    assert np.array_equal(out, st.field_at(0.05), equal_nan=True)


def test_restart_zero_noise_semigroup(grid2):
    g = SID.indicator(0.8, 2)
    zero = NoiseField.zeros(grid2)
    full = mild.picard_solve(g, zero, 2)
    part = mild.restart_solve(full, zero, 0.05, 0.05)
    assert part.t0 == 0.05
    idx = full.chamber.sorted_indices()
    assert np.allclose(part.sorted_values(0.1, idx), full.sorted_values(0.1, idx), atol=1e-12)


def test_restart_seeded_self_consistency(grid2):
    nf = sample_noise(grid2, 33)
    full = mild.picard_solve(SID.constant(1.0, 2), nf, 2)
    part = mild.restart_solve(full, nf, 0.05, 0.05)
    idx = full.chamber.sorted_indices()
    a, b = part.sorted_values(0.1, idx), full.sorted_values(0.1, idx)
    assert np.max(np.abs(a - b)) <= 5e-2 * np.max(np.abs(b))


def test_restart_misaligned(grid2):
    st = mild.picard_solve(SID.constant(1.0, 2), NoiseField.zeros(grid2), 2)
    with pytest.raises(GridError):
        mild.restart_solve(st, NoiseField.zeros(grid2), 0.05, 0.0123)


# -- weak comparison -------------------------------------------------------------------

def test_weak_compare_equal_data(grid2):
    g = SID.indicator(0.8, 2)
    rep = mild.weak_compare(g, g, sample_noise(grid2, 5), 2)
    assert rep["min_difference"] == 0.0 and rep["violations"] == 0


def test_weak_compare_indicator_vs_zero(grid2):
    for seed in range(5):
        rep = mild.weak_compare(SID.indicator(0.8, 2), SID.constant(0.0, 2), sample_noise(grid2, seed), 2)
        assert rep["min_difference"] >= -1e-9
        assert rep["violations"] <= rep["predicted_violations"]


def test_weak_compare_shift_by_constant(grid2):
    nf = sample_noise(grid2, 6)
    g2 = SID.indicator(0.8, 2)
    c = 0.7
    g1 = SID(lambda y: g2(y) + c, 2, 1 + c)
    rep = mild.weak_compare(g1, g2, nf, 2)
    one = mild.picard_solve(SID.constant(1.0, 2), nf, 2)
    a = mild.picard_solve(g1, nf, 2)
    b = mild.picard_solve(g2, nf, 2)
    assert np.allclose(a.F - b.F, c * one.F, atol=1e-11)
    assert rep["min_difference"] > 0


def test_weak_compare_preconditions(grid2):
    with pytest.raises(DomainError):
        mild.weak_compare(SID.constant(0.0, 2), SID.constant(1.0, 2), NoiseField.zeros(grid2), 2)
    periodic = GridSpec.from_spacing(-2.0, 2.0, 0.2, 0.1, 0.005)
    with pytest.raises(DomainError, match="absorbing"):
        mild.weak_compare(SID.constant(1.0, 2), SID.constant(0.0, 2), NoiseField.zeros(periodic), 2)


# -- moment bound ------------------------------------------------------------------------

def test_moment_bound_readings():
    r = {k: mild.moment_bound(1.0, 1.0, 2, 0.5, reading=k) for k in ("series", "text", "sqrt")}
    assert r["text"]["A"] == pytest.approx(2 * r["series"]["A"])
    for v in r.values():
        assert v["bound"] >= 2.0
    with pytest.raises(DomainError):
        mild.moment_bound(1.0, 1.0, 2, 0.5, reading="nope")


def test_moment_bound_formula():
    res = mild.moment_bound(0.5, 2.0, 1, 0.3, reading="series")
    a = 0.3 * math.sqrt(math.pi)
    x = a * math.sqrt(0.5)
    assert res["bound"] == pytest.approx(8.0 * math.exp(x * x) * (1 + math.erf(x)))
    assert res["bound"] == pytest.approx(8.0 * float(kernels.exp_erf(x)))


def test_empirical_second_moment_below_bound():
    # C4 from int K_1(x, y)^2 dy over a few start configurations (n = 2)
    c4 = max(kernels.kernel_l2(1.0, x) for x in ([0.0, 0.0], [0.5, -0.5], [1.5, -1.5]))
    g = GridSpec.from_spacing(-3.0, 3.0, 0.2, 0.25, 0.01, "absorbing")
    vals = []
    for seed in range(40):
        st = mild.picard_solve(SID.constant(1.0, 2), sample_noise(g, seed), 2)
        vals.append(st.value(0.25, [0.2, -0.2]))
    m2 = float(np.mean(np.square(vals)))
    for reading in ("series", "text", "sqrt"):
        assert m2 <= mild.moment_bound(0.25, 1.0, 2, c4, reading=reading)["bound"]

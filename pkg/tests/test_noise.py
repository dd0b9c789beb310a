import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mlshe.errors import GridError, StabilityError
from mlshe.fileio import load_noise, read_binary, save_noise
from mlshe.noise import (
    ROW_BLOCK,
    GridSpec,
    noise_rows,
    sample_noise,
    time_reverse,
    walsh_integrate,
)


def test_grid_derived_spacings():
    g = GridSpec(-1.0, 1.0, 21, 0.5, 50)
    assert g.dx == pytest.approx(0.1)
    assert g.dt == pytest.approx(0.01)
    assert g.nt * g.dt == g.t_max
    assert g.x[0] == -1.0 and g.x[-1] == pytest.approx(1.0)


def test_from_spacing_roundtrip():
    g = GridSpec.from_spacing(-4.0, 4.0, 0.05, 0.5, 0.000625)
    assert g.nx == 161 and g.nt == 800
    assert g.is_stable


@pytest.mark.parametrize("kw", [
    dict(x_min=0, x_max=1, nx=1, t_max=1, nt=1),
    dict(x_min=1, x_max=0, nx=5, t_max=1, nt=1),
    dict(x_min=0, x_max=1, nx=5, t_max=0, nt=1),
    dict(x_min=0, x_max=1, nx=5, t_max=1, nt=0),
    dict(x_min=0, x_max=1, nx=5, t_max=1, nt=1, boundary="reflecting"),
])
def test_invalid_grids(kw):
    with pytest.raises(GridError):
        GridSpec(**kw)


def test_stability_flag():
    g = GridSpec.from_spacing(0.0, 1.0, 0.1, 1.0, 0.01)
    assert not g.is_stable
    with pytest.raises(StabilityError):
        g.require_stable()


def test_same_seed_identical(small_grid):
    a = sample_noise(small_grid, 17)
    b = sample_noise(small_grid, 17)
    assert np.array_equal(a.xi, b.xi)
    assert not np.array_equal(a.xi, sample_noise(small_grid, 18).xi)


def test_noise_is_immutable(small_grid):
    nf = sample_noise(small_grid, 1)
    with pytest.raises(ValueError):
        nf.xi[0, 0] = 1.0


def test_unit_normal_moments():
    g = GridSpec(0.0, 1.0, 1000, 1.0, 1000)
    xi = sample_noise(g, 3).xi
    assert xi.size == 10**6
    assert abs(xi.mean()) < 4 / math.sqrt(xi.size)
    assert abs(xi.var() - 1.0) < 0.01


def test_rows_independent_of_horizon():
    # rows are a function of (seed, row index, nx) only
    short = noise_rows(5, 30, 0, 10)
    longer = noise_rows(5, 30, 0, ROW_BLOCK + 7)
    assert np.array_equal(short, longer[:10])
    assert np.array_equal(noise_rows(5, 30, 3, 9), longer[3:9])


def test_walsh_zero_integrand(small_grid):
    assert walsh_integrate(sample_noise(small_grid, 0), lambda s, y: 0.0 * s * y, small_grid.t_max) == 0.0


def test_walsh_definition(small_grid):
    nf = sample_noise(small_grid, 4)
    f = lambda s, y: np.cos(y) * (1 + s)
    m = small_grid.time_index(0.1)
    s = small_grid.dt * np.arange(m)[:, None]
    direct = np.sum(f(s, small_grid.x[None, :]) * nf.xi[:m]) * math.sqrt(small_grid.dt * small_grid.dx)
    assert walsh_integrate(nf, f, 0.1) == pytest.approx(direct, rel=1e-12)


def test_walsh_out_of_range(small_grid):
    with pytest.raises(GridError):
        walsh_integrate(sample_noise(small_grid, 0), lambda s, y: s, 2 * small_grid.t_max)


def test_ito_isometry_and_disjoint_cells():
    # f = 1 on [0,1] x [0,1]: Var = 1; indicators of disjoint halves: Cov = 0
    g = GridSpec(0.0, 1.0, 11, 1.0, 10, "absorbing")
    one = lambda s, y: np.ones(np.broadcast(s, y).shape)
    left = lambda s, y: (y < 0.45) * np.ones_like(s)
    right = lambda s, y: (y > 0.55) * np.ones_like(s)
    vals, a, b = [], [], []
    for seed in range(10**4):
        nf = sample_noise(g, seed)
        vals.append(walsh_integrate(nf, one, 1.0))
        a.append(walsh_integrate(nf, left, 1.0))
        b.append(walsh_integrate(nf, right, 1.0))
    # sum f^2 dt dx over the 11 x 10 cells = 1.1
    assert np.var(vals) == pytest.approx(1.1, rel=0.05)
    r = np.corrcoef(a, b)[0, 1]
    assert abs(r) < 4 / math.sqrt(10**4)


def test_time_reverse_involution(small_grid):
    nf = sample_noise(small_grid, 9)
    back = time_reverse(time_reverse(nf, 0.1), 0.1)
    assert np.array_equal(back.xi, nf.xi)


def test_time_reverse_single_step(small_grid):
    nf = sample_noise(small_grid, 9)
    assert np.array_equal(time_reverse(nf, small_grid.dt).xi, nf.xi)


def test_time_reverse_rows(small_grid):
    nf = sample_noise(small_grid, 2)
    m = small_grid.time_index(0.1)
    rev = time_reverse(nf, 0.1)
    for j in range(m):
        assert np.array_equal(rev.xi[j], nf.xi[m - 1 - j])
    assert np.array_equal(rev.xi[m:], nf.xi[m:])
    assert sorted(rev.xi.ravel()) == sorted(nf.xi.ravel())


def test_time_reverse_walsh_bookkeeping(small_grid):
    t = 0.1
    nf = sample_noise(small_grid, 6)
    f = lambda s, y: np.exp(-y * y) * (1 + 3 * s)
    g = lambda s, y: f(t - s - small_grid.dt, y)
    assert walsh_integrate(time_reverse(nf, t), f, t) == pytest.approx(walsh_integrate(nf, g, t), rel=1e-12, abs=1e-14)


def test_time_reverse_misaligned(small_grid):
    with pytest.raises(GridError):
        time_reverse(sample_noise(small_grid, 0), 0.5 * small_grid.dt)


def test_noise_shift(small_grid):
    nf = sample_noise(small_grid, 3)
    sh = nf.shifted(10)
    assert np.array_equal(sh.xi[: small_grid.nt - 10], nf.xi[10:])


def test_binary_roundtrip(tmp_path, small_grid):
    nf = sample_noise(small_grid, 12345)
    p = tmp_path / "noise.bin"
    save_noise(nf, p)
    back = load_noise(p)
    assert back.grid == nf.grid and back.seed == 12345
    assert np.array_equal(back.xi, nf.xi)
    raw = p.read_bytes()
    assert raw[:8] == b"MLSHEBIN"
    assert len(raw) == 96 + 8 * small_grid.nt * small_grid.nx


def test_binary_rejects_garbage(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"not a noise file" * 10)
    with pytest.raises(Exception):
        read_binary(p)


@given(seed=st.integers(0, 2**63 - 1), nx=st.integers(2, 40), j0=st.integers(0, 150), span=st.integers(1, 80))
def test_rows_are_slices_of_one_stream(seed, nx, j0, span):
    full = noise_rows(seed, nx, 0, j0 + span)
    assert np.array_equal(noise_rows(seed, nx, j0, j0 + span), full[j0:])

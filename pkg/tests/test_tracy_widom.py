import csv

import numpy as np
import pytest
from scipy import special

from kendall_tw.airy import airy_ai
from kendall_tw.tracy_widom import (
    S_MAX,
    S_MIN,
    TW1Table,
    get_table,
    hastings_mcleod,
    left_asymptotic,
    tw1_cdf,
    tw1_moments,
    tw1_pdf,
    tw1_quantile,
    tw1_sf,
)

# Published GOE Tracy-Widom constants (external tables).
TW1_MEAN = -1.2065335745820
TW1_VAR = 1.607781034581
TW1_Q95 = 0.9793


def fredholm_tw1(s: float, m: int = 80) -> float:
    """Independent oracle: F1(s) = det(I - K) on L^2(0, inf), K(x, y) = Ai((x + y)/2 + s)/2.

    Nystrom discretisation with Gauss-Legendre nodes on [0, L]; the kernel is
    negligible beyond L since Ai(x) < 1e-30 for x > 20.
    """
    L = 2 * (22 - s)
    x, w = np.polynomial.legendre.leggauss(m)
    x = 0.5 * L * (x + 1)
    w = 0.5 * L * w
    sw = np.sqrt(w)
    K = 0.5 * special.airy(0.5 * (x[:, None] + x[None, :]) + s)[0]
    return float(np.linalg.det(np.eye(m) - sw[:, None] * K * sw[None, :]))


@pytest.fixture(scope="module")
def hm():
    return hastings_mcleod()


def test_fredholm_oracle_converged():
    for s in (-8.0, -2.0, 0.0, 3.0):
        assert abs(fredholm_tw1(s, 80) - fredholm_tw1(s, 120)) <= 1e-12


def test_cdf_against_fredholm():
    s = np.linspace(-10, 6, 81)
    ref = np.array([fredholm_tw1(v) for v in s])
    assert np.abs(tw1_cdf(s) - ref).max() <= 1e-6


def test_hm_boundary_and_positivity(hm):
    assert hm(8.0) / airy_ai(8.0) == pytest.approx(1.0, abs=1e-6)
    assert np.all(hm.q > 0)
    assert abs(hm(-10.0) - np.sqrt(5.0)) <= 5e-2


def test_hm_reference_values(hm):
    assert hm(0.0) == pytest.approx(0.3670615515480784, rel=1e-8)
    x = np.linspace(-10, -8, 9)
    assert np.abs(hm(x) / left_asymptotic(x) - 1).max() <= 1e-8
    x = np.linspace(6, 8, 9)
    assert np.abs(hm(x) / airy_ai(x) - 1).max() <= 1e-6


def test_hm_ode_residual(hm):
    x = np.linspace(-10, 8, 301)
    h = 1e-3
    d2 = (hm.derivative(x + h) - hm.derivative(x - h)) / (2 * h)
    q = hm(x)
    assert np.abs(d2 - x * q - 2 * q**3).max() <= 1e-6 * (1 + np.abs(x * q).max())


def test_hm_argument_checks():
    with pytest.raises(ValueError):
        hastings_mcleod(s_max=6.0)
    with pytest.raises(ValueError):
        hastings_mcleod(s_min=-13.0)


def test_table_invariants():
    t = get_table()
    assert np.diff(t.grid).max() <= 0.01
    assert t.grid[0] == S_MIN and t.grid[-1] == S_MAX
    assert np.all(np.diff(t.cdf_values) > 0)
    assert t.cdf_values[0] < 1e-10
    # the true upper tail at s = 8 is about 8e-9
    assert t.cdf_values[-1] > 1 - 1e-8
    assert abs(t.cdf_values[-1] - fredholm_tw1(S_MAX)) <= 1e-12
    assert np.all((t.cdf_values > 0) & (t.cdf_values < 1))


def test_tails():
    assert tw1_cdf(-12.0) < 1e-8
    assert tw1_cdf(8.0) > 1 - 1e-8
    assert tw1_cdf(-50.0) == 0.0 and tw1_cdf(50.0) == 1.0
    assert tw1_sf(50.0) == 0.0 and tw1_sf(-50.0) == 1.0


def test_cdf_monotone_fine_grid():
    v = tw1_cdf(np.linspace(-13, 9, 200001))
    assert np.all(np.diff(v) >= 0)
    assert np.all((v >= 0) & (v <= 1))


def test_sf_complements_cdf():
    s = np.linspace(-10, 8, 301)
    assert np.abs(tw1_cdf(s) + tw1_sf(s) - 1).max() <= 1e-15


def test_density():
    s = np.linspace(S_MIN, S_MAX, 20001)
    f = tw1_pdf(s)
    assert np.all(f >= 0)
    mass = np.sum((f[1:] + f[:-1]) * np.diff(s)) / 2
    assert mass == pytest.approx(1.0, abs=1e-5)
    h = 1e-5
    x = np.linspace(-6, 4, 41)
    fd = (tw1_cdf(x + h) - tw1_cdf(x - h)) / (2 * h)
    assert np.abs(fd - tw1_pdf(x)).max() <= 1e-7


def test_moments_against_published():
    mean, var = tw1_moments()
    assert abs(mean - TW1_MEAN) <= 5e-4
    assert abs(var - TW1_VAR) <= 2e-3
    # the engine is considerably tighter than the acceptance tolerance
    assert abs(mean - TW1_MEAN) <= 1e-7 and abs(var - TW1_VAR) <= 1e-6


def test_quantiles():
    levels = np.array([0.01, 0.5, 0.95, 0.99])
    q = tw1_quantile(levels)
    assert np.abs(tw1_cdf(q) - levels).max() <= 1e-6
    assert np.all(np.diff(tw1_quantile(np.linspace(0.001, 0.999, 999))) > 0)
    assert abs(tw1_quantile(0.95) - TW1_Q95) <= 1e-3
    with pytest.raises(ValueError):
        tw1_quantile(0.0)
    with pytest.raises(ValueError):
        tw1_quantile(np.array([0.5, 1.0]))


def test_grid_refinement():
    coarse = get_table()
    fine = TW1Table.build(step=coarse.grid[1] - coarse.grid[0], bvp_tol=1e-12)
    finer = TW1Table.build(step=0.5 * (coarse.grid[1] - coarse.grid[0]), bvp_tol=1e-12)
    s = np.linspace(-10, 6, 4001)
    assert np.abs(fine.cdf(s) - finer.cdf(s)).max() <= 1e-7
    assert np.abs(coarse.cdf(s) - finer.cdf(s)).max() <= 1e-7


def test_dump(tmp_path):
    path = tmp_path / "tw1.csv"
    get_table().dump(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["s", "cdf", "exponent", "q"]
    assert len(rows) == get_table().grid.size + 1
    s, f = float(rows[100][0]), float(rows[100][1])
    assert f == tw1_cdf(s)

import math

import numpy as np
import pytest

from kendall_tw.hoeffding import (
    EnsembleSpec,
    GammaTooLargeError,
    assemble,
    build_gamma,
    build_T,
    check_conditional_moments,
    check_quadratic_mean,
    decompose,
    gamma_matvec,
    k_hat,
    k_tilde,
    linear_part,
    linear_scores,
    quadratic_mean_matrices,
    sample_H,
    sample_wishart,
)
from kendall_tw.ranks_tau import generate_null_data, n_pairs


def test_T_examples():
    assert build_T(2).tolist() == [[1], [-1]]
    t3 = build_T(3)
    assert t3.shape == (3, 3)
    assert np.all(t3.sum(axis=0) == 0)
    assert np.all((t3 == 1).sum(axis=0) == 1) and np.all((t3 == -1).sum(axis=0) == 1)
    t5 = build_T(5)
    assert np.array_equal(t5 @ t5.T, 5 * np.eye(5, dtype=int) - np.ones((5, 5), dtype=int))


def test_gamma_examples():
    g2 = build_gamma(2)
    assert g2.gamma_num.tolist() == [[2]]
    assert g2.gamma.tolist() == [[2 / 3]]
    assert np.trace(build_gamma(3).gamma_num) == 2 * 3
    g6 = build_gamma(6).gamma_num
    assert np.array_equal(g6 @ g6, 6 * g6)


@pytest.mark.parametrize("n", range(2, 41))
def test_structural_identities_exact(n):
    assert all(build_gamma(n).identities().values())


def test_structural_identities_in_integers():
    # repeat in pure int64 arithmetic for a few sizes, no floats involved
    for n in (2, 7, 13):
        s = build_gamma(n)
        g, t = s.gamma_num, s.t
        assert np.array_equal(g, t.T @ t)
        assert np.array_equal(s.gamma_tilde_num @ s.gamma_tilde_num, (n + 2) * g + np.eye(g.shape[0], dtype=np.int64))


def test_gamma_guard_and_matvec():
    with pytest.raises(GammaTooLargeError):
        build_gamma(50, max_explicit_n=40)
    n = 9
    x = np.random.default_rng(0).standard_normal((n_pairs(n), 3))
    assert np.allclose(gamma_matvec(n)(x), build_gamma(n).gamma @ x, atol=1e-13, rtol=0)


def test_decomposition_exact():
    W = generate_null_data(7, 12, seed=4)
    b = decompose(W)
    assert b.residual() == 0.0
    ulp = np.spacing(np.abs(b.theta))
    assert np.all(np.abs(b.theta - (b.u + b.v_bar)) <= ulp)
    assert np.array_equal(b.linear_scores, 2 * W.values - 1)
    assert np.all(np.abs(b.linear_scores) <= 1)
    # U via the T matrix agrees with direct differences
    via_t = (b.linear_scores @ build_T(12).astype(float)) * (1.0 / math.sqrt(n_pairs(12)))
    assert np.array_equal(via_t, b.u)


def test_vbar_variance():
    W = generate_null_data(200, 200, seed=8)
    b = decompose(W)
    var = float(np.var(b.v_bar * math.sqrt(n_pairs(200))))
    assert abs(var - 1 / 3) <= 0.02


def test_sample_H_moments():
    p, n = 40, 60
    m = n_pairs(n)
    h = sample_H(p, n, seed=3)
    assert h.shape == (p, m)
    assert abs(h.mean()) <= 4 / math.sqrt(3 * m * p * m)
    assert abs(np.var(h * math.sqrt(m)) - 1 / 3) <= 3 * math.sqrt(2 / 9 / (p * m))
    assert np.array_equal(h, sample_H(p, n, seed=3))


def test_ensemble_endpoints():
    p, n = 6, 15
    assert np.array_equal(assemble(EnsembleSpec("K_hat", p, n, t=0.0, seed=2)), assemble(EnsembleSpec("K_tilde", p, n, seed=2)))
    W = generate_null_data(p, n, seed=2)
    u = linear_part(linear_scores(W))
    h = sample_H(p, n, 2)
    a = u + h
    assert np.array_equal(k_hat(u, h, 1.0), a @ a.T)
    assert np.array_equal(assemble(EnsembleSpec("K_hat", p, n, t=1.0, seed=2)), k_hat(u, h, 1.0))


def test_k_tilde_rewrite():
    p, n = 8, 20
    W = generate_null_data(p, n, seed=6)
    s = linear_scores(W)
    m = n_pairs(n)
    calv = math.sqrt(1.5 * (n - 1)) * s / math.sqrt(m)
    sigma = np.eye(n) - np.ones((n, n)) / n
    rhs = 2 * n / (3 * (n - 1)) * calv @ sigma @ calv.T + np.eye(p) / 3
    assert np.abs(k_tilde(linear_part(s)) - rhs).max() <= 1e-10


def test_wishart_trace():
    p, n = 50, 80
    tr = np.mean([np.trace(sample_wishart(p, n, 1, r)) / p for r in range(20)])
    assert abs(tr - 1) <= 5 / math.sqrt(p * n)


def test_invalid_t():
    with pytest.raises(ValueError):
        EnsembleSpec("K_hat", 3, 4, t=1.5)
    with pytest.raises(ValueError):
        EnsembleSpec("bogus", 3, 4)


@pytest.mark.parametrize("p", [100, 200])
def test_operator_norm_sanity(p):
    for seed in range(20):
        b = decompose(generate_null_data(p, p, seed=seed))
        assert np.linalg.eigvalsh(b.u @ b.u.T)[-1] <= 3
        assert np.linalg.eigvalsh(b.v_bar @ b.v_bar.T)[-1] <= 3


def test_conditional_moments():
    checks = check_conditional_moments(100_000, seed=1)
    assert all(abs(c.z) <= 5 for c in checks)
    target = [c for c in checks if c.identity == "E[v_i vbar | w_j]" and c.condition == 0.9][0]
    assert target.expected == pytest.approx(0.5 * (1 / 3 - 0.64), abs=1e-15)
    assert any(c.identity == "E[u vbar]" for c in checks)
    with pytest.raises(ValueError):
        check_conditional_moments(100)


def test_quadratic_mean():
    n = 6
    mats = quadratic_mean_matrices(n, seed=2)
    eye = check_quadratic_mean(mats["identity"], n, 100_000, seed=2, label="I")
    assert eye.expected == pytest.approx(2 / 3, abs=1e-14)
    gam = check_quadratic_mean(mats["gamma"], n, 100_000, seed=2, label="Gamma")
    assert gam.expected == pytest.approx(2 * n / 9, abs=1e-13)
    zero = check_quadratic_mean(mats["zero"], n, 100_000, seed=2, label="0")
    assert zero.estimate == 0.0
    for c in (eye, gam, check_quadratic_mean(mats["random_symmetric"], n, 100_000, 2)):
        assert abs(c.z) <= 5
    with pytest.raises(ValueError):
        check_quadratic_mean(np.eye(3), n)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kendall_tw.limit_laws import kendall_edges
from kendall_tw.ranks_tau import DataMatrix, TieError, generate_null_data, kendall_matrix
from kendall_tw.spectra import (
    EigenError,
    eig_sym,
    edge_statistic,
    finite_size_warnings,
    independence_test,
    power_iteration,
    top_k,
)
from kendall_tw.tracy_widom import tw1_cdf


def jacobi_eigenvalues(A, sweeps=50):
    """Cyclic Jacobi rotations; an oracle sharing no code with LAPACK."""
    A = np.array(A, dtype=float)
    p = A.shape[0]
    for _ in range(sweeps):
        off = np.sqrt((np.triu(A, 1) ** 2).sum())
        if off < 1e-15 * np.abs(A).max():
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                if abs(A[i, j]) < 1e-300:
                    continue
                theta = (A[j, j] - A[i, i]) / (2 * A[i, j])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta**2 + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                R = np.eye(p)
                R[i, i] = R[j, j] = c
                R[i, j], R[j, i] = s, -s
                A = R.T @ A @ R
    return np.sort(np.diag(A))[::-1]


def _sym(p, seed):
    g = np.random.default_rng(seed)
    B = g.standard_normal((p, p))
    return (B + B.T) / 2


def test_eig_examples():
    assert np.array_equal(eig_sym(np.eye(5)).eigenvalues, np.ones(5))
    assert np.allclose(eig_sym(np.diag([3.0, 1.0, 2.0])).eigenvalues, [3, 2, 1], atol=1e-15)
    assert eig_sym(np.eye(2)).method == "dense"


def test_eig_against_jacobi():
    A = _sym(30, 1)
    assert np.abs(eig_sym(A).eigenvalues - jacobi_eigenvalues(A)).max() <= 1e-9


def test_eig_errors():
    with pytest.raises(ValueError):
        eig_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        eig_sym(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eig_sym(np.array([[np.nan, 0], [0, 1.0]]))
    assert issubclass(EigenError, np.linalg.LinAlgError)
    assert EigenError("x", 3).index == 3


@pytest.mark.parametrize("p", [5, 40, 120])
def test_backward_stability(p):
    A = _sym(p, p)
    s = eig_sym(A, vectors=True)
    Q, lam = s.eigenvectors, s.eigenvalues
    assert np.all(np.diff(lam) <= 0)
    assert np.linalg.norm(A - Q @ np.diag(lam) @ Q.T, 2) <= 1e-10 * p * np.linalg.norm(A, 2)


def test_kendall_spectrum_invariants():
    W = generate_null_data(60, 40, seed=3)
    lam = eig_sym(kendall_matrix(W).entries).eigenvalues
    assert np.all(lam >= -1e-10)
    assert lam.sum() == pytest.approx(60, abs=1e-8)


def test_top_k():
    assert top_k(np.diag([1.0, 5.0, 2.0, 4.0, 0.5]), 1).eigenvalues[0] == pytest.approx(5.0, abs=1e-12)
    K = kendall_matrix(generate_null_data(200, 200, seed=7)).entries
    t = top_k(K, 3)
    assert t.method == "lanczos_topk(3)"
    assert np.abs(t.eigenvalues - eig_sym(K).eigenvalues[:3]).max() <= 1e-8
    assert abs(power_iteration(K) - t.eigenvalues[0]) <= 1e-6


def test_top_k_repeated_eigenvalue():
    A = np.diag(np.r_[np.full(3, 2.0), np.linspace(0, 1, 60)])
    assert np.allclose(top_k(A, 3).eigenvalues, 2.0, atol=1e-12)


def test_top_k_errors():
    with pytest.raises(ValueError):
        top_k(np.eye(4), 5)
    with pytest.raises(ValueError):
        top_k(np.eye(100), 51)


def test_edge_statistic_examples():
    for p, n in [(200, 200), (100, 300), (300, 100)]:
        assert edge_statistic(kendall_edges(p / n)[1], p, n) == pytest.approx(0, abs=1e-12)
    n = 200
    assert edge_statistic(3.1, n, n) == pytest.approx(1.5 * n ** (2 / 3) * 4 ** (-2 / 3) * 0.1, rel=1e-12)
    assert edge_statistic(4.1, n, n, "wishart") == pytest.approx(n ** (2 / 3) * 4 ** (-2 / 3) * 0.1, rel=1e-12)
    with pytest.raises(ValueError):
        edge_statistic(3.0, 1, 5)
    with pytest.raises(ValueError):
        edge_statistic(3.0, 5, 5, "goe")


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 500), st.integers(2, 500), st.floats(-2, 2))
def test_edge_statistic_linear_and_signed(p, n, d):
    lp = kendall_edges(p / n)[1]
    s1, s2 = edge_statistic(lp + d, p, n), edge_statistic(lp + 2 * d, p, n)
    assert s2 == pytest.approx(2 * s1, rel=1e-9, abs=1e-9)
    if abs(d) > 1e-12:
        assert (s1 > 0) == (d > 0)


def test_independence_report_invariants():
    r = independence_test(generate_null_data(60, 80, seed=1), alpha=0.05)
    assert 0 <= r.p_value <= 1
    assert r.reject == (r.p_value < r.alpha)
    assert r.p_value == pytest.approx(1 - tw1_cdf(r.statistic), abs=1e-15)
    assert r.c_n == 60 / 80 and r.warnings == []
    assert r.top_k_statistics is None


def test_independence_top_k_and_warnings():
    r = independence_test(generate_null_data(30, 200, seed=2), top=3)
    assert len(r.top_k_statistics) == 3 and r.top_k_statistics[0] == r.statistic
    assert len(r.warnings) == 1
    assert len(finite_size_warnings(10, 1000)) == 2


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 2.0, "0.05"])
def test_alpha_errors(alpha):
    with pytest.raises(ValueError):
        independence_test(generate_null_data(5, 20, seed=0), alpha=alpha)


def test_ties_propagate():
    with pytest.raises(TieError):
        independence_test(np.array([[1.0, 2.0, 2.0], [1.0, 2.0, 3.0]]))


def test_duplicated_rows_rejected():
    base = generate_null_data(25, 200, seed=4).values
    W = np.vstack([base, base])
    r = independence_test(W)
    assert r.lambda_1 >= 2 and r.p_value < 1e-6 and r.reject


def test_monotone_invariance_bitwise():
    W = generate_null_data(60, 100, seed=5).values
    g = np.random.default_rng(0)
    maps = [np.exp, np.arctan, lambda x: x**3 + 2 * x, lambda x: 5 * x - 1]
    V = np.vstack([maps[g.integers(len(maps))](row) for row in W])
    assert independence_test(W, top=2).to_dict() == independence_test(V, top=2).to_dict()


def test_lanczos_method_agrees():
    W = generate_null_data(120, 150, seed=6)
    a, b = independence_test(W, top=2), independence_test(W, top=2, method="lanczos")
    assert np.allclose(a.top_k_eigenvalues, b.top_k_eigenvalues, atol=1e-8)


def test_report_json_roundtrip():
    import json

    r = independence_test(generate_null_data(20, 60, seed=8))
    assert json.loads(r.to_json()) == r.to_dict()


@pytest.mark.slow
def test_null_rejection_rate():
    rej = sum(independence_test(generate_null_data(200, 200, seed=s)).reject for s in range(200))
    assert 0.02 <= rej / 200 <= 0.10

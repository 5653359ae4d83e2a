"""Symmetric eigensolvers, the rescaled edge statistic and the independence test."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg

from ._rng import AUX, stream
from .limit_laws import kendall_edges, mp_edges
from .ranks_tau import DataMatrix, kendall_matrix
from .tracy_widom import tw1_sf

SYMMETRY_TOL = 1e-10
DENSE_MAX = 4000
DENSE_DEFAULT_MAX = 2000
MIN_RELIABLE_DIM = 50
C_RANGE = (0.05, 20.0)


class EigenError(np.linalg.LinAlgError):
    def __init__(self, message: str, index: int | None = None):
        self.index = index
        super().__init__(message)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # descending
    method: str
    eigenvectors: np.ndarray | None = field(default=None, repr=False)

    @property
    def lambda_1(self) -> float:
        return float(self.eigenvalues[0])


def _check_symmetric(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.isfinite(A).all():
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.abs(A).max())) if A.size else 1.0
    asym = float(np.abs(A - A.T).max()) if A.size else 0.0
    if asym > SYMMETRY_TOL * scale:
        raise ValueError(f"matrix is not symmetric (max |A - A'| = {asym:.3g})")
    return A


def eig_sym(A, vectors: bool = False) -> Spectrum:
    """All eigenvalues, descending (LAPACK dsyev: Householder reduction + implicit QL/QR)."""
    A = _check_symmetric(A)
    if A.shape[0] > DENSE_MAX:
        raise ValueError(f"dense solver limited to p <= {DENSE_MAX}; use top_k")
    try:
        if vectors:
            w, v = scipy.linalg.eigh(A, driver="ev", check_finite=False)
        else:
            w, v = scipy.linalg.eigh(A, eigvals_only=True, driver="ev", check_finite=False), None
    except np.linalg.LinAlgError as exc:
        idx = next((int(t) for t in str(exc).split() if t.isdigit()), None)
        raise EigenError(f"eigensolver did not converge: {exc}", idx) from exc
    return Spectrum(w[::-1].copy(), "dense", None if v is None else v[:, ::-1].copy())


def top_k(A, k: int, tol: float = 1e-10, seed: int = 0, max_iter: int | None = None) -> Spectrum:
    """Largest k eigenvalues by Lanczos with full reorthogonalization.

    Stops when every wanted Ritz pair has residual below ``tol * ||A||``.  A
    single Krylov sequence sees one copy of a repeated eigenvalue, so an
    invariant subspace found before convergence hands over to the dense
    solver.
    """
    A = _check_symmetric(A)
    p = A.shape[0]
    if not 1 <= k <= min(p, 50):
        raise ValueError(f"k must lie in [1, min(p, 50)] = [1, {min(p, 50)}]")
    if p <= k + 2:
        return Spectrum(eig_sym(A).eigenvalues[:k], f"lanczos_topk({k})")
    norm = max(float(np.abs(A).sum(axis=1).max()), np.finfo(float).tiny)
    m_max = min(p, max_iter or max(3 * k + 40, 80))
    Q = np.zeros((p, m_max + 1))
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)
    q = stream(seed, AUX, 0).standard_normal(p)
    Q[:, 0] = q / np.linalg.norm(q)
    for j in range(m_max):
        w = A @ Q[:, j]
        alpha[j] = Q[:, j] @ w
        w -= Q[:, : j + 1] @ (Q[:, : j + 1].T @ w)
        w -= Q[:, : j + 1] @ (Q[:, : j + 1].T @ w)
        beta[j] = np.linalg.norm(w)
        m = j + 1
        if m >= k:
            theta, s = scipy.linalg.eigh_tridiagonal(alpha[:m], beta[: m - 1])
            res = np.abs(beta[j] * s[-1, ::-1][:k])
            if np.all(res <= tol * norm):
                return Spectrum(theta[::-1][:k].copy(), f"lanczos_topk({k})")
        if beta[j] <= 1e-13 * norm:
            break
        Q[:, j + 1] = w / beta[j]
    if p <= DENSE_MAX:
        return Spectrum(eig_sym(A).eigenvalues[:k], f"lanczos_topk({k})")
    raise EigenError(f"Lanczos did not converge within {m_max} steps", m_max)


def power_iteration(A, tol: float = 1e-13, max_iter: int = 100000, seed: int = 0) -> float:
    A = _check_symmetric(A)
    x = stream(seed, AUX, 1).standard_normal(A.shape[0])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = A @ x
        new = float(x @ y)
        x = y / np.linalg.norm(y)
        if abs(new - lam) <= tol * max(1.0, abs(new)):
            return new
        lam = new
    return lam


ENSEMBLE_CENTERING = ("kendall", "wishart")


def edge_statistic(lambda_1, p: int, n: int, ensemble: str = "kendall"):
    """Rescaled largest eigenvalue with the finite-n edge (c_n = p/n)."""
    if p < 2 or n < 2:
        raise ValueError("need p, n >= 2")
    c = p / n
    d_plus = mp_edges(c)[1]
    scale = n ** (2.0 / 3.0) * c ** (1.0 / 6.0) * d_plus ** (-2.0 / 3.0)
    lam = np.asarray(lambda_1, dtype=float)
    if ensemble == "kendall":
        out = 1.5 * scale * (lam - kendall_edges(c)[1])
    elif ensemble == "wishart":
        out = scale * (lam - d_plus)
    else:
        raise ValueError(f"ensemble must be one of {ENSEMBLE_CENTERING}")
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class TestReport:
    lambda_1: float
    statistic: float
    p_value: float
    reject: bool
    p: int
    n: int
    c_n: float
    alpha: float
    warnings: list = field(default_factory=list)
    top_k_eigenvalues: list | None = None
    top_k_statistics: list | None = None

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def finite_size_warnings(p: int, n: int) -> list[str]:
    out = []
    if p < MIN_RELIABLE_DIM or n < MIN_RELIABLE_DIM:
        out.append(f"small dimensions (p={p}, n={n}): the Tracy-Widom approximation may be inaccurate below 50")
    c = p / n
    if not C_RANGE[0] <= c <= C_RANGE[1]:
        out.append(f"extreme aspect ratio c_n={c:.4g}: outside [{C_RANGE[0]}, {C_RANGE[1]}], p-value is an extrapolation")
    return out


def independence_test(W, alpha: float = 0.05, top: int | None = None, method: str | None = None) -> TestReport:
    """Right-tailed test of mutual independence of the rows of ``W``."""
    if not (isinstance(alpha, (int, float)) and 0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    W = W if isinstance(W, DataMatrix) else DataMatrix(W)
    p, n = W.p, W.n
    if p < 2:
        raise ValueError("need at least two variables")
    K = kendall_matrix(W).entries
    k = top or 1
    if method is None:
        method = "dense" if p <= DENSE_DEFAULT_MAX else "lanczos"
    spec = eig_sym(K) if method == "dense" else top_k(K, k)
    lam = spec.eigenvalues[:k]
    stats = np.atleast_1d(edge_statistic(lam, p, n, "kendall"))
    pv = float(tw1_sf(stats[0]))
    return TestReport(
        lambda_1=float(lam[0]),
        statistic=float(stats[0]),
        p_value=pv,
        reject=bool(pv < alpha),
        p=p,
        n=n,
        c_n=p / n,
        alpha=float(alpha),
        warnings=finite_size_warnings(p, n),
        top_k_eigenvalues=[float(x) for x in lam] if top else None,
        top_k_statistics=[float(x) for x in stats] if top else None,
    )


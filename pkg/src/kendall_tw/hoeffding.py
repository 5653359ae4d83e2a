"""Hoeffding decomposition of the sign embedding and the derived ensembles.

The pairwise sign ``sign(w_i - w_j)`` splits into a linear part
``v_i - v_j`` with ``v_i = 2F(w_i) - 1`` and a nonlinear remainder.
The linear part drives a covariance-type matrix; replacing the remainder
by Gaussian noise, or by its mean contribution ``I/3``, gives the
comparison ensembles ``K_hat_t`` and ``K_tilde``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import GAUSS_H, MC, WISHART, stream
from .ranks_tau import (
    MARGINALS,
    DataMatrix,
    build_theta,
    generate_null_data,
    kendall_matrix,
    n_pairs,
    pair_index,
)

MAX_EXPLICIT_N = 200


class GammaTooLargeError(MemoryError):
    pass


def build_T(n: int) -> np.ndarray:
    """n x M integer matrix with entries delta(l, i) - delta(l, j) for column (i, j)."""
    if n < 2:
        raise ValueError("need n >= 2")
    i, j = pair_index(n)
    t = np.zeros((n, i.size), dtype=np.int64)
    cols = np.arange(i.size)
    t[i, cols] = 1
    t[j, cols] = -1
    return t


@dataclass(frozen=True)
class StructuralMatrices:
    """T, Gamma and Gamma + I/3 held as integer numerators over 3."""

    n: int
    t: np.ndarray
    gamma_num: np.ndarray  # 3 * Gamma
    gamma_tilde_num: np.ndarray  # 3 * Gamma + I

    @property
    def m_pairs(self) -> int:
        return self.t.shape[1]

    @property
    def gamma(self) -> np.ndarray:
        return self.gamma_num / 3.0

    @property
    def gamma_tilde(self) -> np.ndarray:
        return self.gamma_tilde_num / 3.0

    def identities(self) -> dict[str, bool]:
        """Exact checks of the algebraic identities, all in integer arithmetic.

        Products go through float64 BLAS; every intermediate is an integer
        far below 2**53, so the results are exact.
        """
        n, m = self.n, self.m_pairs
        t = self.t.astype(float)
        g = self.gamma_num.astype(float)
        gt = self.gamma_tilde_num.astype(float)
        eye_m = np.eye(m)
        ones = np.ones((n, n))
        return {
            # Gamma = T'T / 3
            "gamma_eq_TtT_over_3": np.array_equal(g, t.T @ t),
            # Gamma^2 = (n/3) Gamma   <=>  (3G)^2 = n (3G)
            "gamma_sq": np.array_equal(g @ g, n * g),
            # Gamma_tilde^2 = ((n+2)/3) Gamma + I/9   <=>  (3Gt)^2 = (n+2)(3G) + I
            "gamma_tilde_sq": np.array_equal(gt @ gt, (n + 2) * g + eye_m),
            # TT' = nI - 11'
            "TTt": np.array_equal(t @ t.T, n * np.eye(n) - ones),
            # Tr Gamma = 2M/3   <=>  Tr(3G) = 2M
            "trace_gamma": int(np.trace(self.gamma_num)) == 2 * m,
        }


def gamma_numerators(n: int) -> np.ndarray:
    """3 * Gamma straight from chi_(ij)(st) = (d_is + d_jt - d_it - d_js) / 3."""
    i, j = pair_index(n)
    d = lambda a, b: (a[:, None] == b[None, :]).astype(np.int64)  # noqa: E731
    return d(i, i) + d(j, j) - d(i, j) - d(j, i)


def build_gamma(n: int, max_explicit_n: int = MAX_EXPLICIT_N) -> StructuralMatrices:
    if n < 2:
        raise ValueError("need n >= 2")
    if n > max_explicit_n:
        raise GammaTooLargeError(
            f"explicit Gamma for n={n} has M={n_pairs(n)}; use gamma_matvec(n) instead"
        )
    g = gamma_numerators(n)
    return StructuralMatrices(n, build_T(n), g, g + np.eye(g.shape[0], dtype=np.int64))


def gamma_matvec(n: int):
    """x -> Gamma x computed through T without forming Gamma."""
    i, j = pair_index(n)

    def apply(x):
        x = np.asarray(x, dtype=float)
        tx = np.zeros((n,) + x.shape[1:])
        np.add.at(tx, i, x)
        np.subtract.at(tx, j, x)
        return (tx[i] - tx[j]) / 3.0

    return apply


@dataclass(frozen=True)
class HoeffdingBundle:
    theta: np.ndarray
    u: np.ndarray
    v_bar: np.ndarray
    linear_scores: np.ndarray

    def residual(self) -> float:
        """max |theta - u - v_bar|, evaluated in construction order."""
        return float(np.abs(self.theta - self.u - self.v_bar).max())


def linear_scores(W, marginal="uniform") -> np.ndarray:
    """v_(i.) = 2 F(w_i) - 1 for a known marginal CDF (name or callable)."""
    cdf = MARGINALS[marginal].cdf if isinstance(marginal, str) else marginal
    values = W.values if isinstance(W, DataMatrix) else np.asarray(W, dtype=float)
    return 2.0 * cdf(values) - 1.0


def linear_part(scores: np.ndarray) -> np.ndarray:
    """U with entries (v_i - v_j) / sqrt(M)."""
    n = scores.shape[1]
    i, j = pair_index(n)
    return (scores[:, i] - scores[:, j]) * (1.0 / math.sqrt(n_pairs(n)))


def decompose(W, marginal="uniform") -> HoeffdingBundle:
    """Split theta into its linear part U and the remainder V_bar = theta - U."""
    theta = build_theta(W).theta
    scores = linear_scores(W, marginal)
    u = linear_part(scores)
    return HoeffdingBundle(theta, u, theta - u, scores)


def sample_H(p: int, n: int, seed: int, replicate: int = 0) -> np.ndarray:
    """p x M Gaussian matrix with i.i.d. N(0, 1/(3M)) entries, one stream per row."""
    m = n_pairs(n)
    sd = 1.0 / math.sqrt(3.0 * m)
    return np.stack([stream(seed, GAUSS_H, replicate, r).normal(0.0, sd, m) for r in range(p)])


def sample_wishart(p: int, n: int, seed: int, replicate: int = 0) -> np.ndarray:
    x = np.stack([stream(seed, WISHART, replicate, r).standard_normal(n) for r in range(p)])
    return (x @ x.T) / n


ENSEMBLES = ("K", "K_hat", "K_tilde", "wishart_Q")


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str
    p: int
    n: int
    t: float | None = None
    marginal: str = "uniform"
    seed: int = 0
    replicate: int = 0

    def __post_init__(self):
        if self.kind not in ENSEMBLES:
            raise ValueError(f"unknown ensemble {self.kind!r}; choose from {ENSEMBLES}")
        if self.kind == "K_hat":
            if self.t is None or not 0.0 <= self.t <= 1.0:
                raise ValueError(f"K_hat needs t in [0, 1], got {self.t}")
        if self.p < 1 or self.n < 2:
            raise ValueError(f"need p >= 1 and n >= 2, got p={self.p}, n={self.n}")

    def data(self) -> DataMatrix:
        return generate_null_data(self.p, self.n, self.marginal, self.seed, self.replicate)


def k_hat(u: np.ndarray, h: np.ndarray, t: float) -> np.ndarray:
    """(U + tH)(U + tH)' + (1 - t^2) I / 3."""
    a = u + t * h
    return a @ a.T + (1.0 - t * t) / 3.0 * np.eye(u.shape[0])


def k_tilde(u: np.ndarray) -> np.ndarray:
    """UU' + I/3; bitwise equal to ``k_hat`` at t = 0 (u + 0*h is exactly u)."""
    return u @ u.T + (1.0 - 0.0) / 3.0 * np.eye(u.shape[0])


def assemble(spec: EnsembleSpec) -> np.ndarray:
    if spec.kind == "wishart_Q":
        return sample_wishart(spec.p, spec.n, spec.seed, spec.replicate)
    W = spec.data()
    if spec.kind == "K":
        return kendall_matrix(W).entries
    u = linear_part(linear_scores(W, spec.marginal))
    if spec.kind == "K_tilde":
        return k_tilde(u)
    h = sample_H(spec.p, spec.n, spec.seed, spec.replicate)
    return k_hat(u, h, spec.t)


# ---------------------------------------------------------------------------
# Monte Carlo checks of the decomposition's moment identities
# ---------------------------------------------------------------------------

CONDITIONING_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)


@dataclass
class MomentCheck:
    identity: str
    condition: float | None
    estimate: float
    expected: float
    std_error: float
    z_max: float = 5.0

    @property
    def z(self) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.estimate == self.expected else math.inf
        return (self.estimate - self.expected) / self.std_error

    @property
    def passed(self) -> bool:
        return abs(self.z) <= self.z_max

    def as_dict(self) -> dict:
        return {
            "identity": self.identity,
            "condition": self.condition,
            "estimate": self.estimate,
            "expected": self.expected,
            "std_error": self.std_error,
            "z": self.z,
            "passed": self.passed,
        }


def _mc(identity, condition, samples, expected) -> MomentCheck:
    samples = np.asarray(samples, dtype=float)
    se = float(samples.std(ddof=1) / math.sqrt(samples.size))
    return MomentCheck(identity, condition, float(samples.mean()), float(expected), se)


def _vbar(wi, wj):
    """Nonlinear remainder for uniform marginals (v = 2w - 1)."""
    return np.sign(wi - wj) - ((2 * wi - 1) - (2 * wj - 1))


def check_conditional_moments(n_mc: int = 100_000, seed: int = 0) -> list[MomentCheck]:
    """Monte Carlo versions of the conditional moment identities.

    Uniform marginals throughout, so v_(i.) = 2 w_i - 1.  Each estimate is
    compared with its closed form in units of its standard error.
    """
    if n_mc < 10_000:
        raise ValueError("n_mc must be at least 1e4")
    out = []
    for k, w in enumerate(CONDITIONING_GRID):
        g = stream(seed, MC, 1, k)
        other = g.random(n_mc)
        vb_i = _vbar(w, other)  # conditioned on w_i = w
        vb_j = _vbar(other, w)  # conditioned on w_j = w
        out.append(_mc("E[vbar | w_i]", w, vb_i, 0.0))
        out.append(_mc("E[vbar | w_j]", w, vb_j, 0.0))
        out.append(_mc("E[vbar^2 | w_i]", w, vb_i**2, 1 / 3))
        out.append(_mc("E[vbar^2 | w_j]", w, vb_j**2, 1 / 3))
        v_j = 2 * w - 1
        out.append(_mc("E[v_i vbar | w_j]", w, (2 * other - 1) * vb_j, 0.5 * (1 / 3 - v_j**2)))
    g = stream(seed, MC, 2)
    wi, wj, wl = g.random((3, n_mc))
    out.append(_mc("E[v_ij v_il]", None, np.sign(wi - wj) * np.sign(wi - wl), 1 / 3))
    out.append(_mc("E[vbar]", None, _vbar(wi, wj), 0.0))
    out.append(_mc("E[vbar^2]", None, _vbar(wi, wj) ** 2, 1 / 3))
    out.append(_mc("E[u vbar]", None, ((2 * wi - 1) - (2 * wj - 1)) * _vbar(wi, wj), 0.0))
    return out


def quadratic_mean_matrices(n: int, seed: int = 0) -> dict[str, np.ndarray]:
    m = n_pairs(n)
    a = stream(seed, MC, 3).standard_normal((m, m))
    return {
        "identity": np.eye(m),
        "gamma": build_gamma(n).gamma,
        "random_symmetric": (a + a.T) / 2,
        "diagonal": np.diag(stream(seed, MC, 4).random(m)),
        "zero": np.zeros((m, m)),
    }


def check_quadratic_mean(B: np.ndarray, n: int, n_mc: int = 100_000, seed: int = 0,
                         label: str = "B", batch: int = 20_000) -> MomentCheck:
    """Monte Carlo mean of u B u' against Tr(B Gamma) / M for a single row u."""
    m = n_pairs(n)
    B = np.asarray(B, dtype=float)
    if B.shape != (m, m):
        raise ValueError(f"B must be {m} x {m} for n={n}, got {B.shape}")
    expected = float(np.trace(B @ build_gamma(n).gamma)) / m
    vals = []
    for b, start in enumerate(range(0, n_mc, batch)):
        k = min(batch, n_mc - start)
        scores = 2.0 * stream(seed, MC, 5, b).random((k, n)) - 1.0
        u = linear_part(scores)
        vals.append(np.einsum("ij,jk,ik->i", u, B, u))
    return _mc(f"E[u B u'] ({label})", None, np.concatenate(vals), expected)

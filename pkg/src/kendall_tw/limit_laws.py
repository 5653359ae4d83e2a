"""Limiting spectral law of the Kendall matrix.

The global law is the Marchenko-Pastur law pushed through x -> (2/3)x + 1/3:
density (3/2) rho_c((3x - 1)/2), edges (2/3)(1 -/+ sqrt c)^2 + 1/3, and for
c > 1 an atom of mass 1 - 1/c at x = 1/3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)
CDF_TOL = 1e-12


def _check_c(c: float) -> float:
    c = float(c)
    if not c > 0:
        raise ValueError(f"aspect ratio must be positive, got {c}")
    return c


def mp_edges(c: float) -> tuple[float, float]:
    c = _check_c(c)
    r = math.sqrt(c)
    return (1.0 - r) ** 2, (1.0 + r) ** 2


def kendall_edges(c: float) -> tuple[float, float]:
    d_minus, d_plus = mp_edges(c)
    return 2.0 / 3.0 * d_minus + 1.0 / 3.0, 2.0 / 3.0 * d_plus + 1.0 / 3.0


def to_mp(x):
    """Kendall-scale point -> Marchenko-Pastur-scale point."""
    return 1.5 * np.asarray(x, dtype=float) - 0.5


@dataclass(frozen=True)
class SpectralModel:
    c: float
    d_minus: float = field(init=False)
    d_plus: float = field(init=False)
    lambda_minus: float = field(init=False)
    lambda_plus: float = field(init=False)
    point_mass: float = field(init=False)

    def __post_init__(self):
        c = _check_c(self.c)
        dm, dp = mp_edges(c)
        lm, lp = kendall_edges(c)
        for k, v in dict(d_minus=dm, d_plus=dp, lambda_minus=lm, lambda_plus=lp,
                         point_mass=max(0.0, 1.0 - 1.0 / c)).items():
            object.__setattr__(self, k, v)

    @classmethod
    def from_dims(cls, p: int, n: int) -> "SpectralModel":
        return cls(p / n)

    def density(self, x):
        return kendall_density(x, self.c)

    def cdf(self, x):
        return kendall_cdf(x, self.c)

    def stieltjes(self, z):
        return stieltjes_m(z, self.c)


def mp_density(y, c: float):
    dm, dp = mp_edges(c)
    y = np.asarray(y, dtype=float)
    inside = (y > dm) & (y < dp) & (y > 0)
    ys = np.where(inside, y, 1.0)
    val = np.sqrt(np.clip((dp - ys) * (ys - dm), 0.0, None)) / (2.0 * math.pi * c * ys)
    return np.where(inside, val, 0.0)


def kendall_density(x, c: float):
    return 1.5 * mp_density(to_mp(x), c)


def _gl(f, a: float, b: float) -> float:
    h = 0.5 * (b - a)
    return h * float(np.dot(_GL_WEIGHTS, f(a + h * (_GL_NODES + 1.0))))


def adaptive_gauss_legendre(f, a: float, b: float, tol: float = CDF_TOL, depth: int = 40) -> float:
    """Adaptive 20-point Gauss-Legendre; ``f`` must accept arrays."""
    whole = _gl(f, a, b)

    def rec(lo, hi, whole, tol, level):
        mid = 0.5 * (lo + hi)
        left, right = _gl(f, lo, mid), _gl(f, mid, hi)
        if abs(left + right - whole) <= tol or level >= depth:
            return left + right
        return rec(lo, mid, left, 0.5 * tol, level + 1) + rec(mid, hi, right, 0.5 * tol, level + 1)

    return rec(a, b, whole, tol, 0)


def _mp_integrand(c: float):
    # y = d- + (d+ - d-) sin^2(phi) removes the square-root edge behaviour
    dm, dp = mp_edges(c)
    w = dp - dm
    k = w * w / (math.pi * c)

    def g(phi):
        s2 = np.sin(phi) ** 2
        return k * s2 * (1.0 - s2) / (dm + w * s2)

    return g


def _phi_of(y: float, c: float) -> float:
    dm, dp = mp_edges(c)
    return math.asin(math.sqrt(min(1.0, max(0.0, (y - dm) / (dp - dm)))))


def mp_cdf(y, c: float):
    """Marchenko-Pastur CDF including the atom at 0 when c > 1."""
    c = _check_c(c)
    dm, dp = mp_edges(c)
    mass = max(0.0, 1.0 - 1.0 / c)
    g = _mp_integrand(c)
    y = np.asarray(y, dtype=float)
    out = np.empty(y.shape)
    for idx, v in np.ndenumerate(y):
        base = mass if v >= 0.0 else 0.0
        if v >= dp:
            out[idx] = 1.0
        elif v <= dm:
            out[idx] = base
        else:
            out[idx] = min(1.0, base + adaptive_gauss_legendre(g, 0.0, _phi_of(v, c)))
    return out if out.ndim else float(out)


def kendall_cdf(x, c: float):
    # edges compared on the Kendall scale so x = lambda_+ maps to exactly 1
    x = np.asarray(x, dtype=float)
    out = np.where(x >= kendall_edges(c)[1], 1.0, mp_cdf(to_mp(x), c))
    return out if out.ndim else float(out)


def continuous_mass(c: float) -> float:
    """Integral of the density over its support (1 for c <= 1, 1/c otherwise)."""
    return adaptive_gauss_legendre(_mp_integrand(c), 0.0, 0.5 * math.pi)


def stieltjes_m(z, c: float):
    """Stieltjes transform of the Kendall law.

    Root of (2/3)c(z - 1/3)m^2 + (z - 1 + 2c/3)m + 1 = 0 with Im m > 0; for
    z = 1/3 the equation is linear.
    """
    c = _check_c(c)
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise ValueError("stieltjes_m needs Im z > 0")
    a = 2.0 / 3.0 * c * (z - 1.0 / 3.0)
    b = z - 1.0 + 2.0 / 3.0 * c
    disc = np.sqrt(b * b - 4.0 * a)
    sgn = np.where((np.conj(b) * disc).real >= 0, 1.0, -1.0)
    q = -0.5 * (b + sgn * disc)
    r_small = 1.0 / q
    with np.errstate(divide="ignore", invalid="ignore"):
        r_big = np.where(a != 0, q / np.where(a != 0, a, 1.0), np.nan + 0j)
    pick_big = (a != 0) & (r_big.imag > r_small.imag)
    m = np.where(pick_big, r_big, r_small)
    return m if m.ndim else complex(m)


def quantiles(p: int, n: int, j_max: int | None = None, tol: float = 1e-10) -> np.ndarray:
    """gamma_1 >= ... : gamma_j is the smallest x with F(x) = (p - j + 1)/p, c = p/n."""
    if p < 2 or n < 2:
        raise ValueError("need p, n >= 2")
    c = p / n
    model = SpectralModel(c)
    jm = min(p, n) if j_max is None else min(j_max, p, n)
    out = np.empty(jm)
    out[0] = model.lambda_plus
    lo0 = min(1.0 / 3.0, model.lambda_minus) - 1e-9
    for j in range(2, jm + 1):
        target = (p - j + 1) / p
        lo, hi = lo0, out[j - 2]
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if kendall_cdf(mid, c) >= target:
                hi = mid
            else:
                lo = mid
        out[j - 1] = hi
    return out

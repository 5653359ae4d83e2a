"""Tracy-Widom distribution for beta = 1.

F1(s) = exp(-A(s)/2) with A(s) = int_s^inf q + int_s^inf (x - s) q(x)^2 dx and
q the Hastings-McLeod solution of q'' = x q + 2 q^3.  The solution is obtained
as a two-point boundary value problem (Airy data on the right, the
large-negative-x expansion on the left) because shooting from the right is
unstable: the Airy seed excites the Bi-like mode and the trajectory leaves the
separatrix before x = -10.
"""

from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, interpolate, optimize

from .airy import airy_ai, airy_ai_prime

S_MIN = -12.0
S_MAX = 8.0
TABLE_STEP = 0.005
BVP_TOL = 1e-11
_TAIL_END = 16.0  # Ai(16)^2 < 1e-40

# q(-t) ~ sqrt(t/2) * sum_k a_k t^{-3k}
_LEFT_COEFFS = (1.0, -1 / 8, -73 / 128, -10657 / 1024, -13912277 / 32768, -8045883943 / 262144)


class PainleveError(RuntimeError):
    def __init__(self, message: str, leftmost_trusted: float):
        self.leftmost_trusted = leftmost_trusted
        super().__init__(f"{message}; solution trusted only for x >= {leftmost_trusted:g}")


def left_asymptotic(x):
    t = -np.asarray(x, dtype=float)
    s = sum(a * t ** (-3.0 * k) for k, a in enumerate(_LEFT_COEFFS))
    return np.sqrt(t / 2.0) * s


def _rhs(x, y):
    return np.vstack([y[1], x * y[0] + 2.0 * y[0] ** 3])


def _jac(x, y):
    j = np.zeros((2, 2, x.size))
    j[0, 1] = 1.0
    j[1, 0] = x + 6.0 * y[0] ** 2
    return j


def _shoot(s_max: float, x_stop: float):
    """Right-to-left integration from Airy data; used as the BVP starting guess."""
    y0 = [airy_ai(s_max), airy_ai_prime(s_max)]

    def blowup(x, y):
        return y[0]

    blowup.terminal = True
    sol = integrate.solve_ivp(
        lambda x, y: [y[1], x * y[0] + 2.0 * y[0] ** 3],
        (s_max, x_stop), y0, method="DOP853", rtol=1e-13, atol=1e-300,
        dense_output=True, events=blowup,
    )
    return sol


@dataclass(frozen=True)
class HastingsMcLeod:
    x: np.ndarray
    q: np.ndarray
    dq: np.ndarray
    _sol: object = field(repr=False)

    def __call__(self, x):
        return self._sol(np.asarray(x, dtype=float))[0]

    def derivative(self, x):
        return self._sol(np.asarray(x, dtype=float))[1]


def hastings_mcleod(s_min: float = S_MIN, s_max: float = S_MAX, tol: float = BVP_TOL) -> HastingsMcLeod:
    if s_max < 8.0:
        raise ValueError("s_max must be >= 8 so the Airy boundary value is accurate")
    if s_min < S_MIN or s_min >= s_max:
        raise ValueError(f"s_min must lie in [{S_MIN}, s_max)")
    guess_stop = max(s_min, -6.0)
    ivp = _shoot(s_max, guess_stop)
    trusted = float(ivp.t[-1])
    x0 = np.linspace(s_min, s_max, 401)
    y0 = np.empty((2, x0.size))
    right = x0 >= max(trusted, guess_stop)
    y0[:, right] = ivp.sol(x0[right])
    if (~right).any():
        xl = x0[~right]
        y0[0, ~right] = left_asymptotic(xl)
        y0[1, ~right] = np.gradient(left_asymptotic(xl), xl) if xl.size > 1 else -0.5 / math.sqrt(-2 * xl[0])
    qa, qb = float(left_asymptotic(s_min)), float(airy_ai(s_max))

    def bc(ya, yb):
        return np.array([ya[0] - qa, yb[0] - qb])

    sol = integrate.solve_bvp(_rhs, bc, x0, y0, fun_jac=_jac, tol=tol, bc_tol=1e-14, max_nodes=200000)
    if sol.status != 0:
        raise PainleveError(f"boundary value solver failed: {sol.message}", trusted)
    if np.any(sol.y[0] <= 0):
        bad = float(sol.x[np.flatnonzero(sol.y[0] <= 0)[-1]])
        raise PainleveError("solution lost positivity", bad)
    return HastingsMcLeod(sol.x, sol.y[0], sol.y[1], sol.sol)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _cell_integrals(f, grid: np.ndarray) -> np.ndarray:
    """Integral of f over each consecutive grid cell (8-point Gauss-Legendre)."""
    a, b = grid[:-1], grid[1:]
    h = 0.5 * (b - a)
    nodes = (a + b)[:, None] * 0.5 + h[:, None] * _GL_X[None, :]
    return h * (f(nodes.ravel()).reshape(nodes.shape) @ _GL_W)


def _tail_integrals(s_max: float) -> tuple[float, float, float]:
    # q equals Ai up to O(Ai^3) beyond s_max
    edges = np.linspace(s_max, _TAIL_END, 9)
    ai = lambda x: airy_ai(x)  # noqa: E731
    i1 = _cell_integrals(ai, edges).sum()
    j = _cell_integrals(lambda x: ai(x) ** 2, edges).sum()
    x = _cell_integrals(lambda x: x * ai(x) ** 2, edges).sum()
    return float(i1), float(j), float(x)


@dataclass(frozen=True)
class TW1Table:
    """F1 tabulated on [S_MIN, S_MAX] with cubic Hermite interpolation of the exponent.

    ``exponent`` holds A(s) = -2 log F1(s); its exact derivative -(q + J)
    with J(s) = int_s^inf q^2 makes the interpolant fourth-order accurate.
    Every cell satisfies the Fritsch-Carlson condition, so the interpolated
    CDF is monotone.
    """

    grid: np.ndarray
    cdf_values: np.ndarray
    exponent: np.ndarray
    q_values: np.ndarray
    j_values: np.ndarray
    _a_spline: object = field(repr=False)
    _j_spline: object = field(repr=False)
    _q_spline: object = field(repr=False)

    @classmethod
    def build(cls, step: float = TABLE_STEP, bvp_tol: float = BVP_TOL) -> "TW1Table":
        hm = hastings_mcleod(S_MIN, S_MAX, tol=bvp_tol)
        k = int(round((S_MAX - S_MIN) / step))
        grid = np.linspace(S_MIN, S_MAX, k + 1)
        ti, tj, tx = _tail_integrals(S_MAX)
        q = hm(grid)

        def rev_cumsum(cells, tail):
            return np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]]) + tail

        i1 = rev_cumsum(_cell_integrals(hm, grid), ti)
        jj = rev_cumsum(_cell_integrals(lambda x: hm(x) ** 2, grid), tj)
        xx = rev_cumsum(_cell_integrals(lambda x: x * hm(x) ** 2, grid), tx)
        a = i1 + xx - grid * jj
        da = -(q + jj)
        slopes = np.diff(a) / np.diff(grid)
        if np.any(slopes >= 0) or np.any(da >= 0):
            raise PainleveError("TW1 exponent is not strictly decreasing", S_MIN)
        alpha, beta = da[:-1] / slopes, da[1:] / slopes
        if np.any(alpha**2 + beta**2 > 9.0):
            raise PainleveError("table too coarse for a monotone Hermite interpolant", S_MIN)
        a_spline = interpolate.CubicHermiteSpline(grid, a, da)
        j_spline = interpolate.CubicHermiteSpline(grid, jj, -(q**2))
        q_spline = interpolate.CubicHermiteSpline(grid, q, hm.derivative(grid))
        return cls(grid, np.exp(-0.5 * a), a, q, jj, a_spline, j_spline, q_spline)

    def _clip(self, s):
        s = np.asarray(s, dtype=float)
        return s, np.clip(s, S_MIN, S_MAX)

    def cdf(self, s):
        s, sc = self._clip(s)
        val = np.exp(-0.5 * self._a_spline(sc))
        val = np.where(s < S_MIN, 0.0, np.where(s > S_MAX, 1.0, val))
        return np.clip(val, 0.0, 1.0)

    def sf(self, s):
        s, sc = self._clip(s)
        val = -np.expm1(-0.5 * self._a_spline(sc))
        val = np.where(s < S_MIN, 1.0, np.where(s > S_MAX, 0.0, val))
        return np.clip(val, 0.0, 1.0)

    def pdf(self, s):
        s, sc = self._clip(s)
        f = 0.5 * np.exp(-0.5 * self._a_spline(sc)) * (self._q_spline(sc) + self._j_spline(sc))
        return np.where((s < S_MIN) | (s > S_MAX), 0.0, f)

    def quantile(self, prob):
        """Bracket the level inside one table cell, then refine with Brent's method."""
        prob = np.asarray(prob, dtype=float)
        if np.any(~((prob > 0) & (prob < 1))):
            raise ValueError("quantile level must lie in (0, 1)")
        out = np.empty(prob.shape)
        for idx, pr in np.ndenumerate(prob):
            if pr <= self.cdf_values[0]:
                out[idx] = S_MIN
            elif pr >= self.cdf_values[-1]:
                out[idx] = S_MAX
            else:
                k = int(np.searchsorted(self.cdf_values, pr))
                lo, hi = self.grid[k - 1], self.grid[k]
                out[idx] = optimize.brentq(lambda s: float(self.cdf(s)) - pr, lo, hi, xtol=1e-14)
        return out if out.ndim else float(out)

    def moments(self) -> tuple[float, float]:
        """Mean and variance from tail integrals of the CDF."""
        neg = self.grid <= 0
        gl, gr = self.grid[neg], self.grid[~neg]
        gr = np.concatenate([[0.0], gr]) if gr[0] != 0 else gr
        m1 = _cell_integrals(self.sf, gr).sum() - _cell_integrals(self.cdf, gl).sum()
        m2 = 2 * _cell_integrals(lambda s: s * self.sf(s), gr).sum() - 2 * _cell_integrals(
            lambda s: s * self.cdf(s), gl
        ).sum()
        return float(m1), float(m2 - m1 * m1)

    def dump(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "cdf", "exponent", "q"])
            for row in zip(self.grid, self.cdf_values, self.exponent, self.q_values):
                w.writerow([f"{v:.17g}" for v in row])


_lock = threading.Lock()
_table: TW1Table | None = None


def get_table() -> TW1Table:
    global _table
    if _table is None:
        with _lock:
            if _table is None:
                _table = TW1Table.build()
    return _table


def _out(v):
    v = np.asarray(v)
    return v if v.ndim else float(v)


def tw1_cdf(s):
    return _out(get_table().cdf(s))


def tw1_sf(s):
    return _out(get_table().sf(s))


def tw1_pdf(s):
    return _out(get_table().pdf(s))


def tw1_quantile(prob):
    return get_table().quantile(prob)


def tw1_moments() -> tuple[float, float]:
    return get_table().moments()


def dump_table(path) -> None:
    get_table().dump(path)

"""Airy function Ai and its derivative.

Maclaurin series summed in extended precision for |x| <= 10 and the
classical asymptotic expansions beyond.  At |x| = 5 the asymptotic series
bottoms out near 3e-11 relative error, so the switch happens at 10 where it
is below 1e-16.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np

CUTOFF = 10.0
X_RANGE = 20.0
_N_ASYMP = 30


def _asymptotic_coeffs(k_max: int) -> tuple[np.ndarray, np.ndarray]:
    u = [1.0]
    for k in range(1, k_max + 1):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k))
    u = np.array(u)
    v = np.array([1.0] + [-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(1, k_max + 1)])
    return u, v


_U, _V = _asymptotic_coeffs(_N_ASYMP)


def _truncated_sum(coef: np.ndarray, t: float, alternating: bool) -> float:
    # add terms while they keep decreasing
    total, prev = 0.0, math.inf
    term_base = 1.0
    for k, ck in enumerate(coef):
        term = ck * term_base
        if abs(term) >= prev:
            break
        total += -term if (alternating and k % 2) else term
        prev = abs(term)
        if prev < 1e-18 * abs(total):
            break
        term_base /= t
    return total


def _maclaurin(x: float, derivative: bool) -> float:
    dps = 20 + int(abs(x) ** 1.5 / math.log(10)) + 5
    with mpmath.workdps(dps):
        x = mpmath.mpf(x)
        c1 = mpmath.power(3, mpmath.mpf(-2) / 3) / mpmath.gamma(mpmath.mpf(2) / 3)
        c2 = mpmath.power(3, mpmath.mpf(-1) / 3) / mpmath.gamma(mpmath.mpf(1) / 3)
        x3 = x**3
        eps = mpmath.power(10, -dps)
        if not derivative:
            # f = sum 3^k (1/3)_k x^{3k}/(3k)!, g = sum 3^k (2/3)_k x^{3k+1}/(3k+1)!
            f, g = mpmath.mpf(1), x
            tf, tg = mpmath.mpf(1), x
            k = 0
            while True:
                tf *= x3 / ((3 * k + 2) * (3 * k + 3))
                tg *= x3 / ((3 * k + 3) * (3 * k + 4))
                f += tf
                g += tg
                k += 1
                if abs(tf) + abs(tg) < eps * (abs(f) + abs(g)):
                    break
            return float(c1 * f - c2 * g)
        # f' = sum x^{3k+2}/..., g' = 1 + ...
        fp, gp = x**2 / 2, mpmath.mpf(1)
        tf, tg = x**2 / 2, mpmath.mpf(1)
        k = 0
        while True:
            tf *= x3 / ((3 * k + 3) * (3 * k + 5))
            tg *= x3 / ((3 * k + 1) * (3 * k + 3))
            fp += tf
            gp += tg
            k += 1
            if abs(tf) + abs(tg) < eps * (abs(fp) + abs(gp)):
                break
        return float(c1 * fp - c2 * gp)


def _asymptotic(x: float, derivative: bool) -> float:
    if x > 0:
        zeta = 2.0 / 3.0 * x**1.5
        if derivative:
            s = _truncated_sum(_V, zeta, alternating=True)
            return -(x**0.25) * math.exp(-zeta) / (2.0 * math.sqrt(math.pi)) * s
        s = _truncated_sum(_U, zeta, alternating=True)
        return math.exp(-zeta) / (2.0 * math.sqrt(math.pi) * x**0.25) * s
    t = -x
    zeta = 2.0 / 3.0 * t**1.5
    arg = zeta - math.pi / 4.0
    coef = _V if derivative else _U
    even, odd = coef[0::2].copy(), coef[1::2].copy()
    # sums in powers of zeta^-2 with alternating sign
    p_sum = _truncated_sum(even, zeta * zeta, alternating=True)
    q_sum = _truncated_sum(odd, zeta * zeta, alternating=True) / zeta
    if derivative:
        return t**0.25 / math.sqrt(math.pi) * (math.sin(arg) * p_sum - math.cos(arg) * q_sum)
    return (math.cos(arg) * p_sum + math.sin(arg) * q_sum) / (math.sqrt(math.pi) * t**0.25)


def _eval(x, derivative: bool):
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape)
    for idx, v in np.ndenumerate(x):
        if not abs(v) <= X_RANGE:
            raise ValueError(f"x = {v} outside the supported range [-{X_RANGE:g}, {X_RANGE:g}]")
        out[idx] = _maclaurin(v, derivative) if abs(v) <= CUTOFF else _asymptotic(v, derivative)
    return out if out.ndim else float(out)


def airy_ai(x):
    return _eval(x, False)


def airy_ai_prime(x):
    return _eval(x, True)


def overlap_discrepancy(lo: float = CUTOFF, hi: float = 12.0, num: int = 41) -> float:
    """Largest gap between the series and asymptotic branches on lo <= |x| <= hi."""
    worst = 0.0
    for x in np.concatenate([np.linspace(lo, hi, num), -np.linspace(lo, hi, num)]):
        for d in (False, True):
            worst = max(worst, abs(_maclaurin(x, d) - _asymptotic(x, d)))
    return worst

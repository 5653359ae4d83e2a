"""Kolmogorov-Smirnov goodness-of-fit tests with asymptotic p-values."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

MIN_SAMPLES = 20


@dataclass(frozen=True)
class GofReport:
    ks_statistic: float
    p_value: float
    sample_size: int | tuple[int, int]
    reference: str

    def as_dict(self) -> dict:
        return asdict(self)


def kolmogorov_sf(lam: float) -> float:
    """P(sup |B(t)| > lam) for the Brownian bridge."""
    if lam <= 0:
        return 1.0
    if lam < 1.0:
        # theta-function form converges fast for small lam
        s = sum(math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8 * lam * lam)) for k in range(1, 8))
        return min(1.0, max(0.0, 1.0 - math.sqrt(2 * math.pi) / lam * s))
    s = sum((-1) ** (k - 1) * math.exp(-2 * k * k * lam * lam) for k in range(1, 101))
    return min(1.0, max(0.0, 2.0 * s))


def _scaled(d: float, n_eff: float) -> float:
    r = math.sqrt(n_eff)
    return (r + 0.12 + 0.11 / r) * d


def _check(x, name="samples") -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size < MIN_SAMPLES:
        raise ValueError(f"{name}: need at least {MIN_SAMPLES} samples, got {x.size}")
    if not np.isfinite(x).all():
        raise ValueError(f"{name}: non-finite values")
    return x


def ks_one_sample(samples, cdf, reference: str = "tw1") -> GofReport:
    x = np.sort(_check(samples))
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - f), np.max(f - (i - 1) / n), 0.0))
    return GofReport(d, kolmogorov_sf(_scaled(d, n)), n, reference)


def ks_two_sample(a, b) -> GofReport:
    a = np.sort(_check(a, "a"))
    b = np.sort(_check(b, "b"))
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    d = float(np.max(np.abs(fa - fb)))
    n_eff = a.size * b.size / (a.size + b.size)
    return GofReport(d, kolmogorov_sf(_scaled(d, n_eff)), (a.size, b.size), "two_sample")

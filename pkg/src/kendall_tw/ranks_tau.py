"""Data ingestion, tie policy and the Kendall rank correlation matrix.

Rows of the data matrix are variables and columns are samples.  The
rank correlation matrix is computed in two independent ways: a merge-sort
path costing O(p^2 n log n) and an explicit sign embedding ``theta`` whose
Gram matrix reproduces it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special

from . import _kernels
from ._rng import DATA, JITTER, stream

DEFAULT_THETA_BUDGET = 2 * 1024**3  # bytes


class DataError(ValueError):
    """Malformed input data (shape, non-numeric or non-finite cells)."""


class TieError(DataError):
    def __init__(self, row: int, message: str | None = None):
        self.row = row
        super().__init__(message or f"row {row} contains tied values")


class MemoryBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class Marginal:
    name: str
    sample: object  # Generator, size -> ndarray
    cdf: object  # ndarray -> ndarray


MARGINALS = {
    "uniform": Marginal("uniform", lambda g, k: g.random(k), lambda x: np.clip(x, 0.0, 1.0)),
    "gaussian": Marginal("gaussian", lambda g, k: g.standard_normal(k), special.ndtr),
    "cauchy": Marginal(
        "cauchy", lambda g, k: g.standard_cauchy(k), lambda x: 0.5 + np.arctan(x) / np.pi
    ),
    "exponential": Marginal(
        "exponential", lambda g, k: g.standard_exponential(k), lambda x: -np.expm1(-np.maximum(x, 0.0))
    ),
}


@lru_cache(maxsize=32)
def pair_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Column index map (i, j), i < j, in lexicographic order (12), (13), ..., (n-1 n)."""
    if n < 2:
        raise ValueError("need n >= 2")
    i, j = np.triu_indices(n, 1)
    i.setflags(write=False)
    j.setflags(write=False)
    return i, j


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


def _tied_rows(values: np.ndarray) -> list[int]:
    srt = np.sort(values, axis=1)
    return [int(r) for r in np.flatnonzero((np.diff(srt, axis=1) == 0).any(axis=1))]


def jitter_ties(values: np.ndarray, seed: int) -> np.ndarray:
    """Break ties row by row with a seeded perturbation.

    Tied entries move by less than a quarter of the smallest nonzero gap in
    their row, so the relative order of distinct values never changes.
    """
    out = np.array(values, dtype=float, copy=True)
    for r in _tied_rows(out):
        row = out[r]
        uniq = np.unique(row)
        if uniq.size > 1:
            gap = np.diff(uniq).min()
        else:
            gap = 1e-6 * max(1.0, abs(uniq[0]))
        _, inv, counts = np.unique(row, return_inverse=True, return_counts=True)
        tied = counts[inv] > 1
        delta = stream(seed, JITTER, r).uniform(-0.25 * gap, 0.25 * gap, size=int(tied.sum()))
        row[tied] += delta
        if np.unique(row).size != row.size:
            raise TieError(r, f"row {r}: ties could not be broken at floating-point resolution")
    return out


@dataclass(frozen=True)
class DataMatrix:
    """p x n matrix of observations; rows are variables, columns samples."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2:
            raise DataError("data matrix must be two-dimensional")
        if v.shape[0] < 1 or v.shape[1] < 2:
            raise DataError(f"need p >= 1 and n >= 2, got shape {v.shape}")
        if not np.isfinite(v).all():
            r = int(np.flatnonzero(~np.isfinite(v).all(axis=1))[0])
            raise DataError(f"row {r} contains non-finite values")
        tied = _tied_rows(v)
        if tied:
            raise TieError(tied[0])
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_array(cls, values, ties: str = "error", seed: int = 0) -> "DataMatrix":
        v = np.atleast_2d(np.asarray(values, dtype=float))
        if ties == "jitter":
            if not np.isfinite(v).all():
                raise DataError("data contains non-finite values")
            v = jitter_ties(v, seed)
        elif ties != "error":
            raise ValueError(f"unknown tie policy {ties!r}")
        return cls(v)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def c_n(self) -> float:
        return self.p / self.n


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path, ties: str = "error", seed: int = 0) -> DataMatrix:
    """Read a rectangular numeric CSV (rows = variables).

    A first line with any non-numeric cell is treated as a header.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: no data")
    start = 0 if all(_is_number(c) for c in rows[0]) else 1
    width = len(rows[start]) if start < len(rows) else 0
    data = []
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise DataError(f"{path}:{lineno}: ragged row ({len(row)} cells, expected {width})")
        try:
            data.append([float(c) for c in row])
        except ValueError:
            bad = next(c for c in row if not _is_number(c))
            raise DataError(f"{path}:{lineno}: non-numeric cell {bad!r}") from None
    if not data:
        raise DataError(f"{path}: header only")
    return DataMatrix.from_array(np.array(data), ties=ties, seed=seed)


def write_matrix_csv(path, matrix: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.atleast_2d(matrix):
            w.writerow([f"{x:.17g}" for x in row])


def _order_and_ranks(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(values, axis=1, kind="stable").astype(np.int32)
    ranks = np.empty_like(order)
    rows = np.arange(values.shape[0])[:, None]
    ranks[rows, order] = np.arange(values.shape[1], dtype=np.int32)
    return np.ascontiguousarray(order), ranks


def _check_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise DataError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise DataError("need at least two samples")
    for r, v in enumerate((x, y)):
        if np.unique(v).size != v.size:
            raise TieError(r, f"{'xy'[r]} contains tied values")
    return x, y


def concordance_counts(x, y) -> tuple[int, int]:
    """(concordant, discordant) pair counts in O(n log n)."""
    x, y = _check_pair(x, y)
    order, ranks = _order_and_ranks(np.vstack([x, y]))
    disc = int(_kernels.pair_discordant(order[0], ranks[1]))
    return n_pairs(x.size) - disc, disc


def concordance_counts_bruteforce(x, y) -> tuple[int, int]:
    """Same counts by the O(n^2) double loop over sample pairs."""
    x, y = _check_pair(x, y)
    i, j = pair_index(x.size)
    s = np.sign(x[i] - x[j]) * np.sign(y[i] - y[j])
    return int((s > 0).sum()), int((s < 0).sum())


def kendall_tau_pair(x, y) -> float:
    conc, disc = concordance_counts(x, y)
    return (conc - disc) / (conc + disc)


def kendall_tau_bruteforce(x, y) -> float:
    conc, disc = concordance_counts_bruteforce(x, y)
    return (conc - disc) / (conc + disc)


@dataclass(frozen=True)
class KendallMatrix:
    """Kendall rank correlation matrix with its exact integer numerators.

    ``entries = numerators / m_pairs`` where each numerator is a
    concordant-minus-discordant count.
    """

    numerators: np.ndarray
    m_pairs: int
    entries: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", self.numerators / self.m_pairs)

    @property
    def p(self) -> int:
        return self.numerators.shape[0]


def _as_data(W) -> DataMatrix:
    return W if isinstance(W, DataMatrix) else DataMatrix(W)


def kendall_matrix(W, workers: int | None = None) -> KendallMatrix:
    """All pairwise Kendall taus between rows of ``W`` in O(p^2 n log n)."""
    W = _as_data(W)
    order, ranks = _order_and_ranks(W.values)
    pa, pb = np.triu_indices(W.p, 1)
    if workers is not None:
        import numba

        prev = numba.get_num_threads()
        numba.set_num_threads(max(1, min(workers, numba.config.NUMBA_NUM_THREADS)))
    try:
        num = _kernels.concordance_numerators(order, ranks, pa.astype(np.int64), pb.astype(np.int64))
    finally:
        if workers is not None:
            numba.set_num_threads(prev)
    return KendallMatrix(num, n_pairs(W.n))


@dataclass(frozen=True)
class SignEmbedding:
    """p x M matrix of normalized pairwise signs, columns ordered by :func:`pair_index`."""

    theta: np.ndarray
    column_index: tuple[np.ndarray, np.ndarray]

    @property
    def m_pairs(self) -> int:
        return self.theta.shape[1]

    def gram(self) -> np.ndarray:
        return self.theta @ self.theta.T


def build_theta(W, memory_budget: int = DEFAULT_THETA_BUDGET) -> SignEmbedding:
    W = _as_data(W)
    m = n_pairs(W.n)
    need = 8 * W.p * m
    if need > memory_budget:
        raise MemoryBudgetError(
            f"theta needs {need / 1024**3:.2f} GiB (budget {memory_budget / 1024**3:.2f} GiB); "
            "use kendall_matrix for the Gram matrix"
        )
    i, j = pair_index(W.n)
    x = W.values
    theta = np.sign(x[:, i] - x[:, j]) * (1.0 / math.sqrt(m))
    return SignEmbedding(theta, (i, j))


def generate_null_data(
    p: int, n: int, marginal: str = "uniform", seed: int = 0, replicate: int = 0
) -> DataMatrix:
    """p x n i.i.d. draws; each row comes from its own (seed, replicate, row) stream."""
    if p < 1 or n < 2:
        raise ValueError(f"need p >= 1 and n >= 2, got p={p}, n={n}")
    try:
        m = MARGINALS[marginal]
    except KeyError:
        raise ValueError(f"unknown marginal {marginal!r}; choose from {sorted(MARGINALS)}") from None
    values = np.stack([m.sample(stream(seed, DATA, replicate, r), n) for r in range(p)])
    if _tied_rows(values):
        values = jitter_ties(values, seed)
    return DataMatrix(values)

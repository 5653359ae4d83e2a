"""Monte Carlo experiments on the Kendall matrix and its comparison ensembles."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .._rng import AUX, stream
from ..hoeffding import ENSEMBLES, EnsembleSpec, assemble, k_hat, k_tilde, linear_part, linear_scores, sample_H
from ..limit_laws import SpectralModel, kendall_cdf, quantiles
from ..ranks_tau import build_theta, generate_null_data, kendall_matrix, n_pairs
from ..spectra import eig_sym, edge_statistic
from ..tracy_widom import tw1_cdf
from .gof import MIN_SAMPLES, GofReport, ks_one_sample, ks_two_sample

SCHEMA_VERSION = 1
MAX_P2R = 4e10  # p^2 * replicates
MAX_SIGN_BYTES = 2 * 1024**3
STATISTICS = ("lambda_1", "top_k", "esd")
CENTERING = {"K": "kendall", "K_hat": "kendall", "K_tilde": "kendall", "wishart_Q": "wishart"}


class ResourceError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    ensemble: str
    p: int
    n: int
    replicates: int
    seed: int = 0
    t: float | None = None
    marginal: str = "uniform"
    statistic: str = "lambda_1"
    k: int = 1
    centering: str | None = None
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        if self.ensemble not in ENSEMBLES:
            raise ValueError(f"unknown ensemble {self.ensemble!r}; choose from {ENSEMBLES}")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.statistic not in STATISTICS:
            raise ValueError(f"statistic must be one of {STATISTICS}")
        if self.centering not in (None, "kendall", "wishart"):
            raise ValueError("centering must be 'kendall' or 'wishart'")
        if not 1 <= self.k <= self.p:
            raise ValueError("k must lie in [1, p]")
        EnsembleSpec(self.ensemble, self.p, self.n, self.t, self.marginal, self.seed)

    def spec(self, replicate: int) -> EnsembleSpec:
        return EnsembleSpec(self.ensemble, self.p, self.n, self.t, self.marginal, self.seed, replicate)

    @property
    def edge_centering(self) -> str:
        return self.centering or CENTERING[self.ensemble]


def resource_guard(p: int, n: int, replicates: int, ensemble: str = "K") -> None:
    if p * p * replicates > MAX_P2R:
        raise ResourceError(f"p^2 * replicates = {p * p * replicates:.3g} exceeds the budget {MAX_P2R:.3g}")
    if ensemble in ("K_hat", "K_tilde") and 2 * 8 * p * n_pairs(n) > MAX_SIGN_BYTES:
        raise ResourceError(f"p x M working arrays for {ensemble} exceed {MAX_SIGN_BYTES / 1024**3:.0f} GiB")


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


@dataclass
class EdgeSamples:
    config: ExperimentConfig
    eigenvalues: np.ndarray  # replicates x k
    statistics: np.ndarray  # replicates x k

    @property
    def lambda_1(self) -> np.ndarray:
        return self.statistics[:, 0]

    def ks_tw1(self) -> GofReport:
        return ks_one_sample(self.statistics[:, 0], tw1_cdf, "tw1")

    def save(self, directory) -> dict:
        os.makedirs(directory, exist_ok=True)
        cfg = self.config
        tag = f"{cfg.ensemble}" + (f"_t{cfg.t:g}" if cfg.t is not None else "") + f"_p{cfg.p}_n{cfg.n}"
        with open(os.path.join(directory, f"{tag}_samples.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            k = self.statistics.shape[1]
            w.writerow(["replicate", "seed"] + [f"lambda_{i + 1}" for i in range(k)] + [f"stat_{i + 1}" for i in range(k)])
            for r in range(self.statistics.shape[0]):
                w.writerow([r, cfg.seed] + [f"{x:.17g}" for x in self.eigenvalues[r]] + [f"{x:.17g}" for x in self.statistics[r]])
        # workers and output location do not affect the results, so they stay out of the record
        record = {k: v for k, v in asdict(cfg).items() if k not in ("workers", "output")}
        summary = {"schema_version": SCHEMA_VERSION, "config": record, "replicates": int(self.statistics.shape[0])}
        if self.statistics.shape[0] >= MIN_SAMPLES:
            summary["ks_vs_tw1"] = self.ks_tw1().as_dict()
        write_json(os.path.join(directory, f"{tag}_summary.json"), summary)
        return summary


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def top_eigenvalues(A: np.ndarray, k: int) -> np.ndarray:
    return eig_sym(A).eigenvalues[:k]


def mc_edge_samples(cfg: ExperimentConfig) -> EdgeSamples:
    """Rescaled top eigenvalues of ``cfg.replicates`` independent draws."""
    resource_guard(cfg.p, cfg.n, cfg.replicates, cfg.ensemble)
    k = {"top_k": cfg.k, "esd": cfg.p}.get(cfg.statistic, 1)

    def one(r):
        return top_eigenvalues(assemble(cfg.spec(r)), k)

    lam = np.array(_map(one, range(cfg.replicates), cfg.workers)).reshape(cfg.replicates, k)
    stats = np.asarray(edge_statistic(lam, cfg.p, cfg.n, cfg.edge_centering)).reshape(lam.shape)
    out = EdgeSamples(cfg, lam, stats)
    if cfg.output:
        out.save(cfg.output)
    return out


def spectral_histogram(eigenvalues, bins: int = 50, value_range=None) -> tuple[np.ndarray, np.ndarray]:
    """Bin edges and bin masses (summing to one) of an empirical spectrum."""
    x = np.asarray(eigenvalues, dtype=float)
    if value_range is None:
        lo, hi = float(x.min()), float(x.max())
        pad = 1e-12 * max(1.0, abs(hi - lo))
        value_range = (lo - pad, hi + pad)
    counts, edges = np.histogram(x, bins=bins, range=value_range)
    if counts.sum() != x.size:
        raise ValueError("histogram range does not cover every eigenvalue")
    return edges, counts / x.size


def esd_check(p: int, n: int, seed: int = 0, replicate: int = 0, marginal: str = "uniform") -> GofReport:
    """KS distance between one draw's spectrum and the Kendall law at c_n = p/n."""
    if p < MIN_SAMPLES:
        raise ValueError(f"the empirical spectral distribution needs p >= {MIN_SAMPLES}, got p={p}")
    K = kendall_matrix(generate_null_data(p, n, marginal, seed, replicate)).entries
    lam = eig_sym(K).eigenvalues
    c = p / n
    return ks_one_sample(lam, lambda x: kendall_cdf(x, c), "kendall_law")


@dataclass
class RigidityReport:
    p: int
    n: int
    seed: int
    delta: float
    threshold: float
    normalized: np.ndarray  # n^{2/3} i^{1/3} |lambda_i - gamma_i|, i = 1..floor(delta p)
    eigenvalues: np.ndarray
    quantiles: np.ndarray

    @property
    def max_value(self) -> float:
        return float(self.normalized.max())

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.normalized)) + 1

    @property
    def passed(self) -> bool:
        return self.max_value <= self.threshold

    def as_dict(self) -> dict:
        return {
            "p": self.p, "n": self.n, "seed": self.seed, "delta": self.delta,
            "threshold": self.threshold, "max": self.max_value, "argmax_i": self.argmax,
            "passed": self.passed, "normalized": self.normalized.tolist(),
        }


def rigidity_report(p: int, n: int, seed: int = 0, delta: float = 0.1, threshold: float = 10.0,
                    replicate: int = 0) -> RigidityReport:
    if not 0.0 < delta <= 0.2:
        raise ValueError("delta must lie in (0, 0.2]")
    m = max(1, int(math.floor(delta * p)))
    K = kendall_matrix(generate_null_data(p, n, "uniform", seed, replicate)).entries
    lam = eig_sym(K).eigenvalues[:m]
    gam = quantiles(p, n, j_max=m)
    i = np.arange(1, m + 1)
    norm = n ** (2.0 / 3.0) * i ** (1.0 / 3.0) * np.abs(lam - gam)
    return RigidityReport(p, n, seed, delta, threshold, norm, lam, gam)


@dataclass
class InterpolationSweep:
    labels: list[str]
    samples: dict[str, np.ndarray]
    eigenvalues: dict[str, np.ndarray]
    ks: dict[tuple[str, str], GofReport] = field(default_factory=dict)

    def min_p_value(self) -> float:
        return min(r.p_value for r in self.ks.values())

    def as_dict(self) -> dict:
        return {
            "labels": self.labels,
            "pairwise_ks": {f"{a}|{b}": r.as_dict() for (a, b), r in self.ks.items()},
            "ks_vs_tw1": {
                k: ks_one_sample(v, tw1_cdf, "tw1").as_dict() for k, v in self.samples.items() if v.size >= MIN_SAMPLES
            },
        }


def interpolation_sweep(p: int, n: int, t_values=(1.0, 0.5, 0.0), replicates: int = 300, seed: int = 0,
                        include_k: bool = True, include_tilde: bool = True, workers: int = 1) -> InterpolationSweep:
    """Rescaled lambda_1 of K_hat_t for each t, plus K and K_tilde, on shared draws.

    Replicate r of every ensemble uses the same data matrix, so t = 0
    reproduces K_tilde bit for bit.
    """
    t_values = [float(t) for t in t_values]
    if any(not 0.0 <= t <= 1.0 for t in t_values):
        raise ValueError("t values must lie in [0, 1]")
    resource_guard(p, n, replicates * (len(t_values) + 2), "K_hat")
    labels = (["K"] if include_k else []) + [f"K_hat(t={t:g})" for t in t_values] + (["K_tilde"] if include_tilde else [])

    def one(r):
        W = generate_null_data(p, n, "uniform", seed, r)
        mats = {}
        if include_k:
            mats["K"] = kendall_matrix(W).entries
        u = linear_part(linear_scores(W, "uniform"))
        if t_values:
            h = sample_H(p, n, seed, r)
            for t in t_values:
                mats[f"K_hat(t={t:g})"] = k_hat(u, h, t)
        if include_tilde:
            mats["K_tilde"] = k_tilde(u)
        return {lab: top_eigenvalues(A, 1)[0] for lab, A in mats.items()}

    rows = _map(one, range(replicates), workers)
    eig = {lab: np.array([row[lab] for row in rows]) for lab in labels}
    samples = {lab: np.asarray(edge_statistic(v, p, n, "kendall")) for lab, v in eig.items()}
    sweep = InterpolationSweep(labels, samples, eig)
    if replicates < MIN_SAMPLES:
        return sweep
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            sweep.ks[(a, b)] = ks_two_sample(samples[a], samples[b])
    return sweep


# ---------------------------------------------------------------------------
# resolvent identities on small explicit instances
# ---------------------------------------------------------------------------

COND_GUARD = 1e10


@dataclass
class ResolventReport:
    p: int
    n: int
    z: complex
    seed: int
    residuals: dict[str, float]
    rank_perturbation: dict[str, float]
    resamples: int

    def max_residual(self) -> float:
        return max(self.residuals.values())

    def as_dict(self) -> dict:
        d = asdict(self)
        d["z"] = [self.z.real, self.z.imag]
        return d


def _resolvent(a: np.ndarray, z: complex) -> np.ndarray:
    m = a.astype(complex) - z * np.eye(a.shape[0])
    if np.linalg.cond(m) > COND_GUARD:
        raise np.linalg.LinAlgError("near-singular resolvent")
    return np.linalg.inv(m)


def _resolvent_residuals(theta: np.ndarray, z: complex) -> dict[str, float]:
    """Max residuals of the resolvent identities for G = (ThTh' - z)^-1, Gcal = (Th'Th - z)^-1.

    off_diagonal:   G_ij = z G_ii G^(i)_jj v_i Gcal^(ij) v_j'
    minor_update:   G_ab = G^(k)_ab + G_ak G_kb / G_kk
    quadratic_form: v_i Gcal^(i) v_i' = -1/(z G_ii) - 1
    companion:      Th^(k)' G^(k) Th^(k) = I + z Gcal^(k)
    v_i is row i of Th and a superscript (k) removes row k of Th.
    """
    p, m = theta.shape
    rows_all = list(range(p))

    def G(rows):
        t = theta[rows]
        return _resolvent(t @ t.T, z)

    def Gcal(rows):
        t = theta[rows]
        return _resolvent(t.T @ t, z)

    def drop(*ex):
        return [r for r in rows_all if r not in ex]

    g = G(rows_all)
    g_minus = {k: G(drop(k)) for k in rows_all}
    gcal_minus = {k: Gcal(drop(k)) for k in rows_all}
    res = {"off_diagonal": 0.0, "minor_update": 0.0, "quadratic_form": 0.0, "companion": 0.0}
    for i in rows_all:
        others = drop(i)
        for j in others:
            gij = g_minus[i][others.index(j), others.index(j)]
            rhs = z * g[i, i] * gij * (theta[i] @ Gcal(drop(i, j)) @ theta[j])
            res["off_diagonal"] = max(res["off_diagonal"], abs(g[i, j] - rhs))
        gk = g_minus[i]
        rhs = gk + np.outer(g[others, i], g[i, others]) / g[i, i]
        res["minor_update"] = max(res["minor_update"], float(np.abs(g[np.ix_(others, others)] - rhs).max()) if others else 0.0)
        lhs = theta[i] @ gcal_minus[i] @ theta[i]
        res["quadratic_form"] = max(res["quadratic_form"], abs(lhs - (-1.0 / (z * g[i, i]) - 1.0)))
        t = theta[others]
        b_k = t.T @ gk @ t
        res["companion"] = max(res["companion"], float(np.abs(b_k - (np.eye(m) + z * gcal_minus[i])).max()))
    return {k: float(v) for k, v in res.items()}


def _rank_perturbation_check(dim: int, rank: int, z: complex, rng: np.random.Generator) -> dict[str, float]:
    a = rng.standard_normal((dim, dim))
    d = (a + a.T) / 2
    q = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    vecs = rng.standard_normal((dim, rank))
    signs = rng.choice([-1.0, 1.0], size=rank)
    r = (vecs * signs) @ vecs.T
    lhs = abs(np.trace(q @ _resolvent(d + r, z)) - np.trace(q @ _resolvent(d, z)))
    bound = np.linalg.matrix_rank(r) * np.linalg.norm(q, 2) / z.imag
    return {"lhs": float(lhs), "bound": float(bound)}


def verify_resolvent_identities(p: int, n: int, z: complex = 2 + 1j, seed: int = 0,
                                max_resamples: int = 10) -> ResolventReport:
    if p > 20 or n > 20:
        raise ValueError("explicit resolvent checks are limited to p, n <= 20")
    if p < 2 or n < 2:
        raise ValueError("need p, n >= 2")
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("need Im z > 0")
    for attempt in range(max_resamples):
        theta = build_theta(generate_null_data(p, n, "uniform", seed, attempt)).theta
        try:
            res = _resolvent_residuals(theta, z)
            rp = _rank_perturbation_check(n_pairs(n), 2, z, stream(seed, AUX, 2, attempt))
        except np.linalg.LinAlgError:
            continue
        return ResolventReport(p, n, z, seed, res, rp, attempt)
    raise np.linalg.LinAlgError(f"resolvent stayed near-singular after {max_resamples} draws")


def default_esd_cases() -> list[tuple[int, int]]:
    return [(400, 400), (200, 400), (400, 200)]


def law_summary(c: float) -> dict:
    m = SpectralModel(c)
    return {"c": c, "lambda_minus": m.lambda_minus, "lambda_plus": m.lambda_plus, "point_mass": m.point_mass}

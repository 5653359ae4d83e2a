"""Named verification suites and the runner that persists their results."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .._rng import AUX, stream
from ..hoeffding import build_gamma, check_conditional_moments, check_quadratic_mean, decompose, quadratic_mean_matrices
from ..limit_laws import SpectralModel, continuous_mass, kendall_cdf, quantiles, stieltjes_m
from ..ranks_tau import concordance_counts, concordance_counts_bruteforce, generate_null_data, kendall_matrix
from ..spectra import edge_statistic
from ..tracy_widom import tw1_cdf, tw1_moments, tw1_quantile
from .config import RunConfig
from .experiments import (
    ExperimentConfig,
    esd_check,
    interpolation_sweep,
    mc_edge_samples,
    rigidity_report,
    verify_resolvent_identities,
    write_json,
)
from .gof import ks_one_sample, ks_two_sample


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checks: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "checks": self.checks}


def _check(name, passed, **info):
    return {"check": name, "passed": bool(passed), **info}


def structural(cfg: RunConfig, seed: int) -> SuiteResult:
    checks = []
    for n in range(cfg.get_int("structural", "n_min"), cfg.get_int("structural", "n_max") + 1):
        ident = build_gamma(n).identities()
        checks.append(_check(f"n={n}", all(ident.values()), identities=ident))
    return SuiteResult("structural", all(c["passed"] for c in checks), checks)


def decomposition(cfg: RunConfig, seed: int) -> SuiteResult:
    g = stream(seed, AUX, 10)
    tol = cfg.get_float("decomposition", "gram_tol")
    checks = []
    for k in range(cfg.get_int("decomposition", "instances")):
        p = int(g.integers(1, cfg.get_int("decomposition", "p_max") + 1))
        n = int(g.integers(2, cfg.get_int("decomposition", "n_max") + 1))
        W = generate_null_data(p, n, "uniform", seed, 1000 + k)
        b = decompose(W)
        gram = float(np.abs(b.theta @ b.theta.T - kendall_matrix(W).entries).max())
        checks.append(_check(f"p={p},n={n}", b.residual() == 0.0 and gram <= tol, residual=b.residual(), gram_error=gram))
    return SuiteResult("decomposition", all(c["passed"] for c in checks), checks)


def tau(cfg: RunConfig, seed: int) -> SuiteResult:
    g = stream(seed, AUX, 11)
    bad = 0
    count = cfg.get_int("tau", "vectors")
    for _ in range(count):
        n = int(g.integers(2, cfg.get_int("tau", "n_max") + 1))
        x, y = g.permutation(n), g.permutation(n)
        if concordance_counts(x, y) != concordance_counts_bruteforce(x, y):
            bad += 1
    return SuiteResult("tau", bad == 0, [_check("fast == brute force", bad == 0, pairs=count, mismatches=bad)])


def moments(cfg: RunConfig, seed: int) -> SuiteResult:
    n_mc = cfg.get_int("moments", "n_mc")
    zmax = cfg.get_float("moments", "z_max")
    res = check_conditional_moments(n_mc, seed)
    n = cfg.get_int("moments", "quadratic_n")
    for label, B in quadratic_mean_matrices(n, seed).items():
        res.append(check_quadratic_mean(B, n, n_mc, seed, label))
    checks = [dict(m.as_dict(), passed=bool(abs(m.z) <= zmax)) for m in res]
    return SuiteResult("moments", all(c["passed"] for c in checks), checks)


def laws(cfg: RunConfig, seed: int) -> SuiteResult:
    checks = []
    for c in cfg.get_list("laws", "c_values", float):
        m = SpectralModel(c)
        mass = continuous_mass(c)
        checks.append(_check(f"mass c={c}", abs(mass + m.point_mass - 1.0) < 1e-10, value=mass))
        z = np.array([0.5 + 0.5j, 2 + 0.5j, 1 / 3 + 1j])
        mz = stieltjes_m(z, c)
        a = 2 / 3 * c * (z - 1 / 3)
        b = z - 1 + 2 / 3 * c
        resid = float(np.abs(a * mz**2 + b * mz + 1).max())
        checks.append(_check(f"stieltjes c={c}", resid < 1e-12 and np.all(mz.imag > 0), residual=resid))
        above = float(kendall_cdf(m.lambda_plus, c))
        checks.append(_check(f"cdf at upper edge c={c}", above == 1.0, value=above))
    gam = quantiles(200, 200, j_max=5)
    checks.append(_check("gamma_1 = lambda_plus", gam[0] == SpectralModel(1.0).lambda_plus, gamma_1=float(gam[0])))
    mean, var = tw1_moments()
    ref_m, ref_v = cfg.get_float("laws", "tw1_mean"), cfg.get_float("laws", "tw1_var")
    checks.append(_check("tw1 mean", abs(mean - ref_m) <= cfg.get_float("laws", "tw1_mean_tol"), value=mean, reference=ref_m))
    checks.append(_check("tw1 variance", abs(var - ref_v) <= cfg.get_float("laws", "tw1_var_tol"), value=var, reference=ref_v))
    lv = np.array([0.01, 0.5, 0.95, 0.99])
    rt = float(np.abs(tw1_cdf(tw1_quantile(lv)) - lv).max())
    checks.append(_check("tw1 roundtrip", rt <= cfg.get_float("laws", "roundtrip_tol"), error=rt))
    return SuiteResult("laws", all(c["passed"] for c in checks), checks)


def resolvent(cfg: RunConfig, seed: int) -> SuiteResult:
    g = stream(seed, AUX, 12)
    tol = cfg.get_float("resolvent", "tol")
    checks = []
    for k in range(cfg.get_int("resolvent", "instances")):
        p = int(g.integers(2, cfg.get_int("resolvent", "p_max") + 1))
        n = int(g.integers(2, cfg.get_int("resolvent", "n_max") + 1))
        z = complex(g.uniform(-1, 5), g.uniform(0.1, 2))
        r = verify_resolvent_identities(p, n, z, seed + k)
        rp = r.rank_perturbation
        ok = r.max_residual() <= tol and rp["lhs"] <= rp["bound"] * (1 + 1e-12)
        checks.append(_check(f"p={p},n={n}", ok, **r.as_dict()))
    return SuiteResult("resolvent", all(c["passed"] for c in checks), checks)


def rigidity(cfg: RunConfig, seed: int) -> SuiteResult:
    p, n = cfg.get_int("rigidity", "p"), cfg.get_int("rigidity", "n")
    delta, crig = cfg.get_float("rigidity", "delta"), cfg.get_float("rigidity", "c_rig")
    checks = []
    for s in range(cfg.get_int("rigidity", "seeds")):
        r = rigidity_report(p, n, seed + s, delta, crig)
        checks.append(_check(f"seed={seed + s}", r.passed, max=r.max_value, argmax_i=r.argmax))
    return SuiteResult("rigidity", all(c["passed"] for c in checks), checks)


def esd(cfg: RunConfig, seed: int) -> SuiteResult:
    ks_max = cfg.get_float("esd", "ks_max")
    checks = []
    for p, n in cfg.get_pairs("esd", "cases"):
        for s in range(cfg.get_int("esd", "seeds")):
            r = esd_check(p, n, seed + s)
            checks.append(_check(f"p={p},n={n},seed={seed + s}", r.ks_statistic < ks_max, ks=r.ks_statistic))
    return SuiteResult("esd", all(c["passed"] for c in checks), checks)


def edge_samples(p: int, n: int, replicates: int, seed: int, workers: int = 1, output=None):
    k = mc_edge_samples(ExperimentConfig("K", p, n, replicates, seed, workers=workers, output=output))
    q = mc_edge_samples(ExperimentConfig("wishart_Q", p, n, replicates, seed, workers=workers, output=output))
    return k, q


def edge_checks(k, q, p_min: float, control_max: float) -> list[dict]:
    p, n = k.config.p, k.config.n
    one = ks_one_sample(k.lambda_1, tw1_cdf)
    two = ks_two_sample(k.lambda_1, q.lambda_1)
    swap_k = ks_one_sample(edge_statistic(k.eigenvalues[:, 0], p, n, "wishart"), tw1_cdf)
    swap_q = ks_one_sample(edge_statistic(q.eigenvalues[:, 0], p, n, "kendall"), tw1_cdf)
    return [
        _check("K vs TW1", one.p_value > p_min, **one.as_dict()),
        _check("K vs Q", two.p_value > p_min, **two.as_dict()),
        _check("K with Wishart centering vs TW1", swap_k.p_value < control_max, **swap_k.as_dict()),
        _check("Q with Kendall centering vs TW1", swap_q.p_value < control_max, **swap_q.as_dict()),
    ]


def edge(cfg: RunConfig, seed: int, output=None) -> SuiteResult:
    k, q = edge_samples(cfg.get_int("edge", "p"), cfg.get_int("edge", "n"), cfg.get_int("edge", "replicates"),
                        seed, cfg.get_int("run", "workers"), output)
    checks = edge_checks(k, q, cfg.get_float("edge", "p_min"), cfg.get_float("edge", "negative_control_max"))
    return SuiteResult("edge", all(c["passed"] for c in checks), checks)


def interpolation(cfg: RunConfig, seed: int) -> SuiteResult:
    sw = interpolation_sweep(cfg.get_int("interpolation", "p"), cfg.get_int("interpolation", "n"),
                             cfg.get_list("interpolation", "t_values", float), cfg.get_int("interpolation", "replicates"),
                             seed, workers=cfg.get_int("run", "workers"))
    p_min = cfg.get_float("interpolation", "p_min")
    checks = [_check(f"{a} vs {b}", r.p_value > p_min, **r.as_dict()) for (a, b), r in sw.ks.items()]
    return SuiteResult("interpolation", all(c["passed"] for c in checks), checks)


SUITES = {
    "structural": structural,
    "decomposition": decomposition,
    "tau": tau,
    "moments": moments,
    "laws": laws,
    "resolvent": resolvent,
    "rigidity": rigidity,
    "esd": esd,
    "edge": edge,
    "interpolation": interpolation,
}


def run_suites(names, cfg: RunConfig, seed: int | None = None, output: str | None = None, echo=print) -> list[SuiteResult]:
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s) {unknown}; available: {sorted(SUITES)}")
    seed = cfg.get_int("run", "seed") if seed is None else seed
    results = []
    for name in names:
        fn = SUITES[name]
        res = fn(cfg, seed, output) if name == "edge" else fn(cfg, seed)
        results.append(res)
        if echo:
            failed = [c["check"] for c in res.checks if not c["passed"]]
            echo(f"{'PASS' if res.passed else 'FAIL'} {name} ({len(res.checks) - len(failed)}/{len(res.checks)} checks)"
                 + (f"; failing: {', '.join(failed[:5])}" + (" ..." if len(failed) > 5 else "") if failed else ""))
        if output:
            os.makedirs(output, exist_ok=True)
            write_json(os.path.join(output, f"{name}.json"), res.as_dict())
    if output:
        write_json(os.path.join(output, "summary.json"), {
            "schema_version": 1,
            "seed": seed,
            "suites": {r.name: r.passed for r in results},
            "passed": all(r.passed for r in results),
        })
    return results


def run_config(path: str, echo=print) -> int:
    cfg = RunConfig.load(path)
    names = cfg.get_list("run", "suites")
    out = cfg.get("run", "output")
    results = run_suites(names, cfg, output=out, echo=echo)
    return 0 if all(r.passed for r in results) else 1

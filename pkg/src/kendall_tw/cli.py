"""Command line entry point: ``kendall-tw <command> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .harness.config import ConfigError, RunConfig
from .harness.experiments import ExperimentConfig, mc_edge_samples
from .harness.suites import SUITES, run_config, run_suites
from .limit_laws import SpectralModel, kendall_cdf, kendall_density, quantiles
from .ranks_tau import DataError, kendall_matrix, load_csv, write_matrix_csv
from .spectra import independence_test
from .tracy_widom import dump_table, tw1_cdf, tw1_moments, tw1_quantile

ENSEMBLE_ALIASES = {"k": "K", "ktilde": "K_tilde", "wishart": "wishart_Q"}


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def cmd_tau(args) -> int:
    W = load_csv(args.input, ties=args.ties, seed=args.seed)
    K = kendall_matrix(W)
    write_matrix_csv(args.output, K.entries)
    print(f"wrote {K.p}x{K.p} Kendall matrix (n={W.n}) to {args.output}")
    return 0


def cmd_verify(args) -> int:
    overrides = {}
    if args.n_max is not None:
        overrides[("structural", "n_max")] = args.n_max
    if args.mc is not None:
        overrides[("moments", "n_mc")] = args.mc
    cfg = RunConfig.load(args.config, overrides)
    names = list(SUITES) if args.suite == "all" else [s.strip() for s in args.suite.split(",")]
    results = run_suites(names, cfg, seed=args.seed, output=args.output)
    return 0 if all(r.passed for r in results) else 1


def cmd_laws(args) -> int:
    if args.quantiles:
        p, n = (int(v) for v in args.quantiles.split(","))
        gam = quantiles(p, n)
        out = open(args.output, "w", newline="") if args.output else sys.stdout
        w = csv.writer(out)
        w.writerow(["j", "gamma_j"])
        for j, g in enumerate(gam, start=1):
            w.writerow([j, f"{g:.15g}"])
        if args.output:
            out.close()
        return 0
    if args.c is None:
        raise SystemExit("laws: give --c (with --grid) or --quantiles p,n")
    m = SpectralModel(args.c)
    lo = min(m.lambda_minus, 1.0 / 3.0)
    x = np.linspace(lo, m.lambda_plus, args.grid)
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    w = csv.writer(out)
    w.writerow(["x", "density", "cdf"])
    for xi, d, f in zip(x, kendall_density(x, args.c), kendall_cdf(x, args.c)):
        w.writerow([f"{xi:.15g}", f"{d:.15g}", f"{f:.15g}"])
    if args.output:
        out.close()
    print(f"# c={args.c} lambda-={m.lambda_minus:.12g} lambda+={m.lambda_plus:.12g} point_mass={m.point_mass:.12g}",
          file=sys.stderr)
    return 0


def cmd_tw1(args) -> int:
    if args.dump_table:
        dump_table(args.dump_table)
        print(f"wrote TW1 table to {args.dump_table}")
    if args.cdf is not None:
        print(_fmt(tw1_cdf(args.cdf)))
    if args.quantile is not None:
        print(_fmt(tw1_quantile(args.quantile)))
    if args.moments:
        mean, var = tw1_moments()
        print(f"mean {_fmt(mean)}\nvariance {_fmt(var)}")
    return 0


def cmd_test(args) -> int:
    W = load_csv(args.input, ties=args.ties, seed=args.seed)
    report = independence_test(W, alpha=args.alpha, top=args.top_k)
    text = report.to_json()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    print(text)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def _parse_ensemble(spec: str) -> tuple[str, float | None]:
    s = spec.strip().lower()
    if s.startswith("khat"):
        _, _, t = s.partition(":")
        if not t:
            raise SystemExit("simulate: khat needs a parameter, e.g. khat:0.5")
        return "K_hat", float(t)
    if s not in ENSEMBLE_ALIASES:
        raise SystemExit(f"simulate: unknown ensemble {spec!r} (k, khat:T, ktilde, wishart)")
    return ENSEMBLE_ALIASES[s], None


def cmd_simulate(args) -> int:
    kind, t = _parse_ensemble(args.ensemble)
    cfg = ExperimentConfig(
        kind, args.p, args.n, args.replicates, args.seed, t=t, marginal=args.marginal,
        statistic="top_k" if args.top_k > 1 else "lambda_1", k=args.top_k, workers=args.workers, output=args.out,
    )
    res = mc_edge_samples(cfg)
    summary = {"ensemble": kind, "t": t, "replicates": args.replicates, "mean_statistic": float(res.lambda_1.mean())}
    if args.replicates >= 20:
        summary["ks_vs_tw1"] = res.ks_tw1().as_dict()
    print(json.dumps(summary, indent=2))
    return 0


def cmd_run(args) -> int:
    return run_config(args.config)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kendall-tw", description="Kendall rank correlation spectra and Tracy-Widom tests")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tau", help="Kendall rank correlation matrix of a CSV (rows = variables)")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--ties", choices=["error", "jitter"], default="error")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_tau)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--suite", required=True, help=f"one of {', '.join(SUITES)}, a comma list, or 'all'")
    p.add_argument("--n-max", type=int)
    p.add_argument("--mc", type=int, help="Monte Carlo size for the moments suite")
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.add_argument("--output")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("laws", help="Kendall limiting law on a grid, or its quantiles")
    p.add_argument("--c", type=float)
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--quantiles", help="p,n")
    p.add_argument("--output")
    p.set_defaults(func=cmd_laws)

    p = sub.add_parser("tw1", help="Tracy-Widom (beta=1) distribution")
    p.add_argument("--dump-table")
    p.add_argument("--cdf", type=float)
    p.add_argument("--quantile", type=float)
    p.add_argument("--moments", action="store_true")
    p.set_defaults(func=cmd_tw1)

    p = sub.add_parser("test", help="independence test on a CSV (rows = variables)")
    p.add_argument("--input", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--top-k", type=int)
    p.add_argument("--ties", choices=["error", "jitter"], default="error")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="Monte Carlo edge statistics of an ensemble")
    p.add_argument("--ensemble", required=True, help="k, khat:T, ktilde or wishart")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--replicates", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--top-k", type=int, default=1)
    p.add_argument("--marginal", default="uniform")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="run the suites named in a config file")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DataError, ConfigError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

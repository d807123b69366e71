"""Command-line entry point: ``pamlab {simulate,lemmas,kbeta,noise-check,fit-rate,report}``.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 failed check
in ``--check`` mode.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .experiment import (
    ExperimentConfig,
    run_kbeta,
    run_lemmas,
    run_noise_check,
    run_simulate,
    simulation_checks,
    validate_beta,
)
from .kernels import DomainError, QuadratureError
from .noise import NoiseError
from .solver import ConfigError, NumericalError
from .stats import fit_rate

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CHECK = 0, 2, 3, 4


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig.from_dict({})
    return cfg.with_seed(args.seed)


def _print_checks(checks) -> bool:
    for name, ok, detail in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return all(ok for _, ok, _ in checks)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    res = run_simulate(cfg, args.out, threads=args.threads)
    rep = res.report
    print(f"sigma_mode={rep['sigma_mode']} replicas={rep['replicas']} "
          f"positivity={rep['positivity']['fraction_nonnegative']:.6f}")
    for v in rep["variance"]:
        print(f"R={v['R']:g} Var={v['variance']:.5g}+-{v['variance_se']:.2g} "
              f"chaos1={v['chaos1_variance']:.5g} limit={v['limit_variance']:.5g}")
    if rep["degenerate"]:
        print("degenerate: zero variance, distances undefined")
    for d in rep["distances"]:
        print(f"R={d['R']:g} sup={d['sup_dist']:.4f} tv={d['tv']:.4f} ks={d['kolmogorov']:.4f} "
              f"bw={d['bandwidth']:.4f}")
    if args.check and not _print_checks(simulation_checks(rep, cfg.params.beta)):
        return EXIT_CHECK
    return EXIT_OK


def cmd_lemmas(args) -> int:
    cfg = _config(args)
    results = run_lemmas(cfg, args.out, threads=args.threads)
    for r in results:
        extra = f" slope={r.slope:.4f} bound={r.bound:.4f}" if r.slope is not None else ""
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.lemma}{extra}")
    if args.check and not all(r.passed for r in results):
        return EXIT_CHECK
    return EXIT_OK


def cmd_kbeta(args) -> int:
    res = run_kbeta(args.d, args.beta)
    print(f"{res['kbeta']:.7f}")
    if args.check and args.d == 1 and abs(res["kbeta"] - res["closed_form"]) > 1e-8:
        return EXIT_CHECK
    return EXIT_OK


def cmd_noise_check(args) -> int:
    validate_beta(1, args.beta)
    res = run_noise_check(args.n_cells, args.h, args.dt, args.beta, args.samples, args.seed or 0)
    print(json.dumps(res, indent=2, sort_keys=True))
    ok = max(res["circulant_max_err_se"], res["cholesky_max_err_se"]) <= 5.0
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "noise_check.json").write_text(json.dumps(res, indent=2, sort_keys=True) + "\n")
    return EXIT_CHECK if args.check and not ok else EXIT_OK


def cmd_fit_rate(args) -> int:
    path = Path(args.input) if args.input else Path(args.out) / "distances.csv"
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if not rows or args.column not in rows[0]:
        raise ConfigError(f"column {args.column!r} not found in {path}")
    fit = fit_rate([(float(r["R"]), float(r[args.column])) for r in rows])
    print(f"slope={fit.slope:.6f} stderr={fit.stderr:.6f} intercept={fit.intercept:.6f} n={fit.n_points}")
    return EXIT_OK


def cmd_report(args) -> int:
    path = Path(args.out) / "report.json"
    try:
        rep = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    print(f"sigma_mode={rep['sigma_mode']} replicas={rep['replicas']}")
    for v in rep["variance"]:
        print(f"R={v['R']:g} Var/chaos1={v['var_over_chaos1']:.4f} Var/limit={v['var_over_limit']:.4f}")
    for name, fit in rep["rate_fits"].items():
        print(f"fit {name}: slope={fit['slope']:.4f} +- {fit['stderr']:.4f}")
    ok = _print_checks(simulation_checks(rep, rep["params"]["beta"]))
    return EXIT_CHECK if args.check and not ok else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config (schema 1)")
    common.add_argument("--seed", type=int, help="override master_seed (unsigned 64-bit)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    common.add_argument("--out", default="pamlab-out", help="output directory")
    common.add_argument("--check", action="store_true", help="exit 4 if the run's checks fail")

    p = argparse.ArgumentParser(prog="pamlab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common]).set_defaults(func=cmd_simulate)
    sub.add_parser("lemmas", parents=[common]).set_defaults(func=cmd_lemmas)
    k = sub.add_parser("kbeta", parents=[common])
    k.add_argument("--d", type=int, default=1)
    k.add_argument("--beta", type=float, required=True)
    k.set_defaults(func=cmd_kbeta)
    n = sub.add_parser("noise-check", parents=[common])
    n.add_argument("--n-cells", type=int, default=64)
    n.add_argument("--h", type=float, default=0.05)
    n.add_argument("--dt", type=float, default=1e-3)
    n.add_argument("--beta", type=float, default=0.5)
    n.add_argument("--samples", type=int, default=100_000)
    n.set_defaults(func=cmd_noise_check)
    f = sub.add_parser("fit-rate", parents=[common])
    f.add_argument("--input", help="CSV with R and distance columns (default OUT/distances.csv)")
    f.add_argument("--column", default="tv")
    f.set_defaults(func=cmd_fit_rate)
    sub.add_parser("report", parents=[common]).set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc} (replica {exc.replica}, step {exc.step})", file=sys.stderr)
        return EXIT_NUMERICAL
    except (QuadratureError, NoiseError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

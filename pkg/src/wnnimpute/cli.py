"""Command-line entry point: ``wnnimpute {impute,tune,simulate,bench,assoc}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 infeasible plan.
Errors are reported as one ``error: <category>: <message>`` line on stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from ._core import BACKEND
from .association import MEASURES, association_matrix, dummy_pearson_matrix
from .data import encode_dummies, read_csv, read_schema, write_csv
from .errors import ImputeError
from .imputation import KNN_DISTANCES, METHODS, ImputationConfig, impute_matrix
from .neighbors import KERNELS
from .simulation import (bundled_scenarios, format_table, load_scenarios,
                         mcar_mask, reports_to_csv, run_experiment)
from .tuning import DEFAULT_LAMBDAS, DEFAULT_OMEGAS, CVPlan, cross_validate, pfc

log = logging.getLogger("wnnimpute")


def _floats(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="governs all randomness")
    p.add_argument("--threads", type=int, default=1, help="worker cap for the engine")
    p.add_argument("--missing-token", default="NA")
    p.add_argument("--schema", help="YAML schema listing per-column categories")
    p.add_argument("--no-header", action="store_true", help="omit the provenance comment line")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _engine(p: argparse.ArgumentParser, method_default="wnnsel_cat") -> None:
    p.add_argument("--method", choices=METHODS, default=method_default)
    p.add_argument("--kernel", choices=KERNELS)
    p.add_argument("--q", type=int, choices=(1, 2))
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--k", dest="neighbor_count", type=int,
                   help="neighbour count (default: all rows; required for knn_cat)")
    p.add_argument("--knn-distance", choices=KNN_DISTANCES)
    p.add_argument("--association", choices=MEASURES)
    _cv(p)


def _cv(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda-grid", type=_floats, default=DEFAULT_LAMBDAS)
    p.add_argument("--omega-grid", type=_floats, default=DEFAULT_OMEGAS)
    p.add_argument("--cv-sets", type=int, default=5)
    p.add_argument("--injection-rate", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wnnimpute",
        description="Association-weighted nearest-neighbour imputation of categorical data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("impute", help="fill missing cells of a CSV")
    p.add_argument("input")
    p.add_argument("output")
    _engine(p)
    _common(p)

    p = sub.add_parser("tune", help="cross-validate lambda/omega and write the error surface")
    p.add_argument("input")
    p.add_argument("output")
    _engine(p)
    _common(p)

    p = sub.add_parser("simulate", help="run a scenario file (or bundled scenario name)")
    p.add_argument("scenario", help=f"file or one of: {', '.join(bundled_scenarios())}")
    p.add_argument("--out", help="per-replicate CSV report")
    p.add_argument("--table", help="write the formatted mean-PFC table here")
    p.add_argument("--replicates", type=int, help="override the scenario's replicate count")
    p.add_argument("--workers", type=int, default=1, help="replicate-level processes")
    _common(p)

    p = sub.add_parser("bench", help="repeated delete-impute-score runs on a complete CSV")
    p.add_argument("input")
    p.add_argument("--out", help="per-run CSV report")
    p.add_argument("--rates", type=_floats, default=(0.1, 0.2, 0.3))
    p.add_argument("--runs", type=int, default=30)
    p.add_argument("--methods", default="mode,wnnsel_cat.gauss.q1,wnnsel_dum",
                   help="comma-separated labels, e.g. mode, wnnsel_cat.tri.q2, "
                        "wnnsel_dum, knn_cat.smc.k3")
    _cv(p)
    _common(p)

    p = sub.add_parser("assoc", help="write the attribute association matrix as CSV")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--measure", choices=MEASURES + ("dummy_pearson",), default="cramers_v")
    _common(p)
    return parser


def parse_method_label(label: str, seed: int = 0, threads: int = 1) -> ImputationConfig:
    """Inverse of :meth:`ImputationConfig.label`."""
    parts = label.strip().split(".")
    head = parts[0]
    try:
        if head == "mode" and len(parts) == 1:
            return ImputationConfig(method="mode", seed=seed)
        if head == "wnnsel_dum" and len(parts) == 1:
            return ImputationConfig(method="wnnsel_dum", seed=seed, threads=threads)
        if head == "wnnsel_cat" and len(parts) == 3:
            kernel = {"gauss": "gaussian", "tri": "triangular"}[parts[1]]
            return ImputationConfig(method="wnnsel_cat", kernel=kernel,
                                    q=int(parts[2].lstrip("q")), seed=seed, threads=threads)
        if head == "knn_cat" and len(parts) == 3:
            return ImputationConfig(method="knn_cat", knn_distance=parts[1],
                                    neighbor_count=int(parts[2].lstrip("k")), seed=seed)
    except (KeyError, ValueError):
        pass
    raise ValueError(f"cannot parse method label {label!r}")


def _config_from_args(args, parser) -> ImputationConfig:
    if args.method == "wnnsel_dum":
        if args.kernel not in (None, "gaussian") or args.q not in (None, 2):
            parser.error("wnnsel_dum always uses --kernel gaussian --q 2")
    if args.method in ("mode", "knn_cat"):
        for flag, val in (("--lambda", args.lam), ("--omega", args.omega),
                          ("--kernel", args.kernel), ("--q", args.q)):
            if val is not None:
                parser.error(f"{flag} does not apply to --method {args.method}")
    if args.method == "knn_cat" and args.neighbor_count is None:
        parser.error("--method knn_cat requires --k")
    if args.method != "knn_cat" and args.knn_distance is not None:
        parser.error("--knn-distance only applies to --method knn_cat")
    kw = dict(method=args.method, seed=args.seed, threads=args.threads,
              neighbor_count=args.neighbor_count)
    for name in ("kernel", "q", "lam", "omega", "association", "knn_distance"):
        val = getattr(args, name)
        if val is not None:
            kw[name] = val
    try:
        return ImputationConfig(**kw)
    except ValueError as exc:
        parser.error(str(exc))


def _plan_from_args(args, config=None) -> CVPlan:
    lg, og = args.lambda_grid, args.omega_grid
    # a pinned value collapses its grid
    if config is not None and getattr(args, "lam", None) is not None:
        lg = (args.lam,)
    if config is not None and getattr(args, "omega", None) is not None:
        og = (args.omega,)
    return CVPlan(lambda_grid=lg, omega_grid=og, n_sets=args.cv_sets,
                  injection_rate=args.injection_rate, seed=args.seed)


def _header(args, extra=None) -> list[str]:
    if args.no_header:
        return []
    cfg = {k: v for k, v in vars(args).items()
           if k not in ("verbose", "no_header", "output", "out", "table")}
    if extra:
        cfg.update(extra)
    return [f"wnnimpute {__version__} backend={BACKEND} seed={args.seed} "
            f"config={json.dumps(cfg, sort_keys=True, default=str)}"]


def _read(args):
    schema = read_schema(args.schema) if args.schema else None
    return read_csv(args.input, schema=schema, missing_token=args.missing_token)


def cmd_impute(args, parser) -> int:
    config = _config_from_args(args, parser)
    Z = _read(args)
    extra = {}
    if config.tunable and Z.n_missing and (args.lam is None or args.omega is None):
        plan = _plan_from_args(args, config)
        cv = cross_validate(Z, plan, config)
        config = replace(config, lam=cv.best_lambda, omega=cv.best_omega)
        print(f"tuned lambda={cv.best_lambda!r} omega={cv.best_omega!r}", file=sys.stderr)
        extra = {"tuned_lambda": cv.best_lambda, "tuned_omega": cv.best_omega}
    res = impute_matrix(Z, config)
    d = res.diagnostics
    log.info("imputed %d cells (%d fallback, %d ties)", Z.n_missing, len(d.fallback_cells), d.ties)
    write_csv(res.completed, args.output, args.missing_token, _header(args, extra))
    return 0


def cmd_tune(args, parser) -> int:
    config = _config_from_args(args, parser)
    if not config.tunable:
        parser.error(f"--method {config.method} has nothing to tune")
    Z = _read(args)
    cv = cross_validate(Z, _plan_from_args(args, config), config)
    print(f"tuned lambda={cv.best_lambda!r} omega={cv.best_omega!r}", file=sys.stderr)
    cv.to_csv(args.output, _header(args, {"best_lambda": cv.best_lambda,
                                          "best_omega": cv.best_omega}))
    return 0


def cmd_simulate(args, parser) -> int:
    try:
        scenarios = load_scenarios(args.scenario)
    except FileNotFoundError as exc:
        parser.error(str(exc))
    reports = []
    for sc in scenarios:
        sc = replace(sc, seed=sc.seed + args.seed) if args.seed else sc
        t0 = time.perf_counter()
        rep = run_experiment(sc, workers=args.workers, replicates=args.replicates)
        log.info("%s miss=%.2f done in %.1fs", sc.name, sc.miss_rate, time.perf_counter() - t0)
        reports.append(rep)
    table = format_table(reports)
    print(table)
    if args.table:
        Path(args.table).write_text(table + "\n", encoding="utf-8")
    if args.out:
        reports_to_csv(reports, args.out, _header(args))
    return 0


def cmd_bench(args, parser) -> int:
    try:
        configs = [parse_method_label(x, args.seed, args.threads)
                   for x in args.methods.split(",") if x.strip()]
    except ValueError as exc:
        parser.error(str(exc))
    if args.runs < 1:
        parser.error("--runs must be >= 1")
    Z = _read(args)
    rows = []
    summary = {}
    for ri, rate in enumerate(args.rates):
        for run in range(args.runs):
            masked, truth, hidden = mcar_mask(Z, rate, [args.seed, ri, run])
            for cfg in configs:
                cfg = replace(cfg, seed=args.seed * 1000003 + run)
                lam = om = ""
                if cfg.tunable:
                    plan = CVPlan(lambda_grid=args.lambda_grid, omega_grid=args.omega_grid,
                                  n_sets=args.cv_sets, injection_rate=args.injection_rate,
                                  seed=cfg.seed)
                    cv = cross_validate(masked, plan, cfg)
                    lam, om = cv.best_lambda, cv.best_omega
                    cfg = replace(cfg, lam=lam, omega=om)
                res = impute_matrix(masked, cfg)
                v = pfc(truth, res.completed, hidden)
                rows.append([rate, cfg.label(), run, v, int(hidden.sum()), lam, om])
                summary.setdefault((rate, cfg.label()), []).append(v)
    labels = [c.label() for c in configs]
    width = max(12, *(len(x) + 2 for x in labels))
    print("miss".ljust(8) + "".join(x.rjust(width) for x in labels))
    for rate in args.rates:
        print(f"{rate:.0%}".ljust(8) + "".join(
            f"{np.mean(summary[(rate, x)]):.4f}".rjust(width) for x in labels))
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            for line in _header(args):
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["miss_rate", "method", "run", "pfc", "n_cells", "lambda", "omega"])
            w.writerows(rows)
    return 0


def cmd_assoc(args, parser) -> int:
    Z = _read(args)
    if args.measure == "dummy_pearson":
        Zd = encode_dummies(Z)
        M = dummy_pearson_matrix(Zd, Z.observed)
        names = [f"{a.display_name}={a.token(c)}" for a in Z.attributes
                 for c in range(1, a.num_categories + 1)]
    else:
        M = association_matrix(Z, args.measure)
        names = [a.display_name for a in Z.attributes]
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        for line in _header(args):
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([""] + names)
        for name, row in zip(names, M):
            w.writerow([name] + [repr(float(x)) for x in row])
    return 0


COMMANDS = {"impute": cmd_impute, "tune": cmd_tune, "simulate": cmd_simulate,
            "bench": cmd_bench, "assoc": cmd_assoc}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    try:
        return COMMANDS[args.command](args, parser)
    except ImputeError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

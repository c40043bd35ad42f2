"""Command-line entry point: ``gbht {synth,fit,cv,eval,score,curve}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np
from scipy.integrate import trapezoid

from . import __version__
from .anomaly import score as score_points
from .boosting import GbhtConfig, fit_gbht, gbht_density_at, gbht_log_density_at
from .data_io import load_csv, load_model, save_model, write_csv
from .errors import DimensionMismatchError, GbhtError
from .evaluation import EvalReport, anll, auc, cross_validate, mae, parse_grid
from .synthetic import KINDS, SyntheticKind, sample_synthetic, true_pdf

log = logging.getLogger("gbht")


def emit_density_curve(model, lo, hi, resolution, path):
    """Write ``resolution + 1`` evenly spaced ``(x, density)`` rows for a 1-D model."""
    if model.dim != 1:
        raise DimensionMismatchError(f"density curves need a 1-D model, got d={model.dim}")
    if resolution < 1 or not hi > lo:
        raise ValueError("need resolution >= 1 and hi > lo")
    xs = np.linspace(lo, hi, int(resolution) + 1)
    dens = gbht_density_at(model, xs[:, None])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "density"])
        for x, f in zip(xs.tolist(), dens.tolist()):
            w.writerow([repr(x), repr(f)])
    return xs, dens


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, allow_nan=True)
        fh.write("\n")


def _cmd_synth(args):
    kind = SyntheticKind(args.type, args.d)
    X = sample_synthetic(kind, args.n, np.random.default_rng(args.seed))
    write_csv(args.out, X)
    print(f"rows {X.shape[0]}")
    print(f"cols {X.shape[1]}")


def _config(args, **extra):
    return GbhtConfig(
        iterations=args.T,
        learner_mode=args.mode,
        shrinkage=args.shrinkage,
        density_floor=args.floor,
        seed=args.seed,
        line_search=args.line_search,
        **extra,
    )


def _cmd_fit(args):
    data = load_csv(args.data).matrix
    cfg = _config(args, s_min=args.smin, s_max=args.smax)
    model = fit_gbht(data, cfg)
    save_model(model, args.model)
    print(f"train_nll {model.train_nll_trace[-1]:.6f}")
    print(f"iterations {model.n_iterations}")


def _cmd_cv(args):
    data = load_csv(args.data).matrix
    smin_grid, gap_grid = parse_grid(args.smin_grid), parse_grid(args.gap_grid)
    cfg = _config(args, s_min=smin_grid[0], s_max=smin_grid[0] + gap_grid[0])
    res = cross_validate(
        data, cfg, smin_grid, gap_grid, args.folds, np.random.default_rng(args.seed),
        threads=args.threads or os.cpu_count() or 1,
    )
    out = res.to_dict()
    out["config"] = cfg.to_dict()
    _write_json(args.report, out)
    best = min(row[3] for row in res.table)
    print(f"cv_anll {best:.6f}")
    print(f"s_min {res.chosen[0]}")
    print(f"s_max {res.chosen[1]}")


def _cmd_eval(args):
    model = load_model(args.model)
    test = load_csv(args.test, label_column=args.labels)
    X = test.matrix
    report = EvalReport(
        anll=anll(gbht_log_density_at(model, X)), n_test=X.shape[0], config=model.config.to_dict()
    )
    if args.truth_type is not None:
        kind = SyntheticKind(args.truth_type, args.truth_d or X.shape[1])
        if kind.dim != X.shape[1]:
            raise DimensionMismatchError(f"--truth-d {kind.dim} but test data has d={X.shape[1]}")
        report.mae = mae(gbht_density_at(model, X), true_pdf(kind, X))
    if test.labels is not None:
        report.auc = auc(-gbht_density_at(model, X), test.labels)
    _write_json(args.report, report.to_dict())
    print(f"anll {report.anll:.6f}")
    if report.mae is not None:
        print(f"mae {report.mae:.6g}")
    if report.auc is not None:
        print(f"auc {report.auc:.6f}")


def _cmd_score(args):
    model = load_model(args.model)
    ds = load_csv(args.data, label_column=args.labels)
    res = score_points(model, ds.matrix, rho=args.rho, contamination=args.contamination)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["score", "flag"])
        for s, f in zip(res.scores.tolist(), res.flags.tolist()):
            w.writerow([repr(s), int(f)])
    print(f"rho {res.threshold:.6g}")
    print(f"flagged {int(res.flags.sum())}")
    if ds.labels is not None:
        print(f"auc {auc(res.scores, ds.labels):.6f}")


def _cmd_curve(args):
    model = load_model(args.model)
    xs, dens = emit_density_curve(model, args.lo, args.hi, args.res, args.out)
    print(f"points {xs.size}")
    print(f"integral {float(trapezoid(dens, xs)):.6f}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=0, help="0 = auto")
    common.add_argument("-v", "--verbose", action="store_true")

    boost = argparse.ArgumentParser(add_help=False)
    boost.add_argument("--T", type=int, required=True)
    boost.add_argument("--mode", choices=["weighted", "greedy"], default="greedy")
    boost.add_argument("--shrinkage", type=float, default=1.0)
    boost.add_argument("--floor", type=float, default=1e-12)
    boost.add_argument("--line-search", choices=["golden", "newton"], default="golden")

    p = argparse.ArgumentParser(prog="gbht", description=__doc__)
    p.add_argument("--version", action="version", version=f"gbht {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="sample a synthetic dataset")
    s.add_argument("--type", required=True, choices=list(KINDS))
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_synth)

    s = sub.add_parser("fit", parents=[common, boost], help="fit a boosted model")
    s.add_argument("--data", required=True)
    s.add_argument("--smin", type=float, required=True)
    s.add_argument("--smax", type=float, required=True)
    s.add_argument("--model", required=True)
    s.set_defaults(func=_cmd_fit)

    s = sub.add_parser("cv", parents=[common, boost], help="cross-validate scale parameters")
    s.add_argument("--data", required=True)
    s.add_argument("--smin-grid", required=True, help="start:step:stop or a comma list; write --smin-grid=-3:0.5:3 for negative starts")
    s.add_argument("--gap-grid", required=True, help="start:step:stop")
    s.add_argument("--folds", type=int, default=3)
    s.add_argument("--report", required=True)
    s.set_defaults(func=_cmd_cv)

    s = sub.add_parser("eval", parents=[common], help="evaluate a model on test data")
    s.add_argument("--model", required=True)
    s.add_argument("--test", required=True)
    s.add_argument("--truth-type", choices=list(KINDS))
    s.add_argument("--truth-d", type=int)
    s.add_argument("--labels", help="label column name in the test file")
    s.add_argument("--report", required=True)
    s.set_defaults(func=_cmd_eval)

    s = sub.add_parser("score", parents=[common], help="anomaly scores and flags")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--rho", type=float)
    g.add_argument("--contamination", type=float)
    s.add_argument("--labels", help="label column name")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_score)

    s = sub.add_parser("curve", parents=[common], help="1-D density curve as CSV")
    s.add_argument("--model", required=True)
    s.add_argument("--lo", type=float, required=True)
    s.add_argument("--hi", type=float, required=True)
    s.add_argument("--res", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_curve)
    return p


def _validate(args, parser):
    checks = {
        "T": lambda v: v >= 0,
        "n": lambda v: v >= 1,
        "d": lambda v: v >= 1,
        "folds": lambda v: v >= 2,
        "res": lambda v: v >= 1,
        "threads": lambda v: v >= 0,
        "shrinkage": lambda v: 0 < v <= 1,
        "floor": lambda v: v >= 0,
        "rho": lambda v: v is None or v >= 0,
        "contamination": lambda v: v is None or 0 <= v <= 1,
    }
    for name, ok in checks.items():
        if hasattr(args, name) and not ok(getattr(args, name)):
            parser.error(f"invalid value for --{name}: {getattr(args, name)}")
    if getattr(args, "smin", None) is not None and not args.smin < args.smax:
        parser.error("--smin must be < --smax")


def run(argv=None):
    """Run the CLI; returns the process exit code (0 ok, 1 runtime error, 2 usage)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _validate(args, parser)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except (GbhtError, ValueError, OSError) as exc:
        print(f"gbht {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())

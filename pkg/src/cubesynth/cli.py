"""Command-line front end.

Subcommands: generate, calibrate, evaluate, audit, match.  Every
subcommand prints a human-readable summary to stdout and, when --report
is given, writes a versioned JSON document plus matplotlib figures next
to it.  Exit codes: 0 success, 1 usage/parse/configuration error,
2 conditioning Failure, 3 solver error.  All randomness flows from
--seed; commands with random stages refuse to run without one.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import figures
from .conditioning import draw_until_conditioned
from .cube import Dataset, low_degree_count
from .dataio import ingest, write_csv
from .errors import (
    ConditioningFailure,
    ConfigurationError,
    CubeSynthError,
    InputError,
    IntegrityError,
    ParseError,
    SolverError,
)
from .evaluation import (
    CalibrationParams,
    accuracy_report,
    exact_match,
    recommend_k,
    recommend_m,
    recommend_m_master,
)
from .pipeline import PipelineConfig, generate
from .privacy import NeighborPair, audit_sensitivity, sensitivity_bound
from .rng import stream_generator

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2
EXIT_SOLVER = 3


class UsageError(Exception):
    def __init__(self, message: str, usage: str):
        super().__init__(message)
        self.usage = usage


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems through the exit-code scheme
    instead of calling sys.exit(2) itself."""

    def error(self, message):
        raise UsageError(message, self.format_usage())


def _write_report(path: str | None, doc: dict) -> None:
    if path is None:
        return
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _figure_path(report: str, name: str) -> Path:
    report_path = Path(report)
    return report_path.with_name(report_path.stem + f"_{name}.png")


def _add_common(parser: argparse.ArgumentParser, seed_required: bool) -> None:
    parser.add_argument("--seed", type=int, required=seed_required,
                        help="64-bit master seed; every random stage derives from it")
    parser.add_argument("--report", type=str, default=None,
                        help="write a JSON report (and figures) to this path")


def _cmd_generate(args) -> tuple[int, dict]:
    X = ingest(args.input, args.format)
    k = "auto" if args.k is None else args.k
    cfg = PipelineConfig(
        p=X.p, d=args.degree, m=args.m, seed=args.seed, delta=args.delta,
        Delta=args.Delta, k=k, epsilon=args.epsilon, max_attempts=args.max_attempts,
    )
    Y, h_star, run = generate(X, cfg)
    write_csv(Y, args.output)

    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "generate",
        "config": {
            "input": args.input, "output": args.output, "p": X.p, "n": X.n,
            "degree": cfg.d, "m": cfg.m, "delta": cfg.delta, "Delta": cfg.Delta,
            "k": cfg.k, "epsilon": cfg.epsilon, "seed": cfg.seed,
            "max_attempts": cfg.max_attempts,
        },
        "conditioning": {
            "passed": run.verdict.passed,
            "sigma_min": run.verdict.sigma_min,
            "threshold": run.verdict.threshold,
            "attempts": run.verdict.attempts,
        },
        "lambda": run.lambda_used,
        "residuals": run.residuals,
        "k": run.k_used,
        "epsilon_guaranteed": run.epsilon_guaranteed,
        "sensitivity_eta": run.sensitivity_bound,
        "seed_trail": run.seed_trail,
        "timings": run.timings,
    }
    if args.evaluate and Y.n:
        acc = accuracy_report(X, Y, cfg.d)
        doc["accuracy"] = {
            "max_error": acc.max_error,
            "mean_error": acc.mean_error,
            "per_degree": {str(k_): list(v) for k_, v in acc.per_degree().items()},
        }
    if args.report:
        figs = [figures.weight_figure(h_star.weights, cfg.select_box.lo,
                                      cfg.select_box.hi,
                                      _figure_path(args.report, "weights"))]
        if args.evaluate and Y.n:
            buckets: dict[int, list[float]] = {}
            for q, err in acc.per_query_errors.items():
                buckets.setdefault(q.dimension, []).append(err)
            figs.append(figures.accuracy_figure(
                buckets, _figure_path(args.report, "accuracy")))
        doc["figures"] = figs

    print(f"conditioning: sigma_min={run.verdict.sigma_min:.6g} "
          f">= threshold={run.verdict.threshold:.6g} "
          f"(attempt {run.verdict.attempts})")
    print(f"shrinkage lambda: {run.lambda_used:.3g}")
    print(f"constraint residual: {run.residuals['constraint']:.3g}  "
          f"mass error: {run.residuals['mass_error']:.3g}")
    print(f"synthetic records: {run.k_used}  "
          f"epsilon guaranteed: {run.epsilon_guaranteed:.6g}  "
          f"sensitivity eta: {run.sensitivity_bound:.6g}")
    print(f"wrote {args.output}")
    return EXIT_OK, doc


def _cmd_calibrate(args) -> tuple[int, dict]:
    C = low_degree_count(args.p, args.degree)
    m = recommend_m(args.p, args.degree, args.gamma)
    rows = [("coefficient count C(p,<=d)", C), ("reduced-space size m", m)]
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "calibrate",
        "config": {"p": args.p, "degree": args.degree, "gamma": args.gamma,
                   "delta": args.delta, "alpha": args.alpha, "kappa": args.kappa,
                   "seed": args.seed},
        "coefficient_count": C,
        "m": m,
    }
    ks = None
    if args.delta is not None:
        cal = CalibrationParams(gamma=args.gamma, alpha=args.alpha,
                                kappa=args.kappa, delta_target=args.delta)
        m_master = recommend_m_master(args.p, args.degree, cal)
        k = recommend_k(args.p, args.degree, args.gamma, args.delta)
        rows += [("matching-regime size m", m_master), ("sample count k", k)]
        doc["m_master"] = m_master
        doc["k"] = k
    for label, value in rows:
        print(f"{label:>28}: {value}")
    if args.report:
        gammas = np.logspace(-3, np.log10(0.9), 40)
        ms = np.array([recommend_m(args.p, args.degree, g) for g in gammas])
        if args.delta is not None:
            ks = np.array([recommend_k(args.p, args.degree, g, args.delta)
                           for g in gammas])
        doc["figures"] = [figures.calibration_figure(
            gammas, ms, ks, args.gamma, _figure_path(args.report, "calibration"))]
    return EXIT_OK, doc


def _cmd_evaluate(args) -> tuple[int, dict]:
    X = ingest(args.input, args.format)
    Y = ingest(args.synthetic, args.format)
    acc = accuracy_report(X, Y, args.degree)
    per_degree = acc.per_degree()
    print(f"{'dimension':>10} {'max error':>12} {'mean error':>12}")
    for dim, (mx, mean) in per_degree.items():
        print(f"{dim:>10} {mx:>12.6g} {mean:>12.6g}")
    print(f"{'overall':>10} {acc.max_error:>12.6g} {acc.mean_error:>12.6g}")
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "evaluate",
        "config": {"input": args.input, "synthetic": args.synthetic,
                   "degree": args.degree, "seed": args.seed},
        "max_error": acc.max_error,
        "mean_error": acc.mean_error,
        "per_degree": {str(k): list(v) for k, v in per_degree.items()},
    }
    if args.report:
        buckets: dict[int, list[float]] = {}
        for q, err in acc.per_query_errors.items():
            buckets.setdefault(q.dimension, []).append(err)
        doc["figures"] = [figures.accuracy_figure(
            buckets, _figure_path(args.report, "accuracy"))]
    return EXIT_OK, doc


def _cmd_audit(args) -> tuple[int, dict]:
    X = ingest(args.input, args.format)
    cfg = PipelineConfig(p=X.p, d=args.degree, m=args.m, seed=args.seed,
                         delta=args.delta, Delta=args.Delta, k=0,
                         max_attempts=args.max_attempts)
    cfg.validate()
    shared = draw_until_conditioned(cfg.p, cfg.m, cfg.d, cfg.seed, cfg.max_attempts)
    pairs: list[NeighborPair] = []
    if args.neighbor is not None:
        pairs.append(NeighborPair(base=X, extended=ingest(args.neighbor, args.format)))
    else:
        record_gen = stream_generator(args.seed, 1)
        for _ in range(args.trials):
            record = record_gen.integers(0, 2, size=(1, X.p), dtype=np.int8) * 2 - 1
            extended = Dataset(np.vstack([X.rows, record]))
            pairs.append(NeighborPair(base=X, extended=extended))
    records = [audit_sensitivity(pair, cfg, shared) for pair in pairs]
    eta = sensitivity_bound(X.n, cfg.m, cfg.p, cfg.d, cfg.delta, cfg.Delta)
    worst = max(r.linf_distance for r in records)
    worst_ratio = max(r.max_ratio for r in records)
    violations = sum(r.violation for r in records)
    print(f"audited pairs: {len(records)} ({records[0].kind})")
    print(f"max density distance: {worst:.6g}  bound eta: {eta:.6g}")
    print(f"max pointwise ratio: {worst_ratio:.9g}  bound: {records[0].ratio_bound:.6g}")
    print(f"violations: {violations}")
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "audit",
        "config": {"input": args.input, "neighbor": args.neighbor,
                   "trials": args.trials, "degree": cfg.d, "m": cfg.m,
                   "delta": cfg.delta, "Delta": cfg.Delta, "seed": cfg.seed,
                   "n": X.n},
        "eta": eta,
        "pairs": [
            {"kind": r.kind, "linf_distance": r.linf_distance,
             "max_ratio": r.max_ratio, "ratio_bound": r.ratio_bound,
             "lambda_base": r.lambda_base, "lambda_extended": r.lambda_extended,
             "violation": r.violation}
            for r in records
        ],
        "max_distance": worst,
        "violations": violations,
    }
    if args.report:
        doc["figures"] = [figures.audit_figure(
            [r.linf_distance for r in records], eta,
            _figure_path(args.report, "audit"))]
    return (EXIT_OK if violations == 0 else EXIT_SOLVER), doc


def _cmd_match(args) -> tuple[int, dict]:
    X = ingest(args.input, args.format)
    C = low_degree_count(X.p, args.degree)
    if args.m < C:
        raise ConfigurationError(
            f"m={args.m} is below C(p,<=d)={C}; the design matrix cannot have "
            "full column rank")
    shared = draw_until_conditioned(X.p, args.m, args.degree, args.seed,
                                    args.max_attempts)
    result = exact_match(X, shared)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "match",
        "config": {"input": args.input, "degree": args.degree, "m": args.m,
                   "seed": args.seed, "n": X.n, "p": X.p},
        "outcome": result.outcome,
        "iterations": result.iterations,
    }
    if result.feasible:
        print(f"outcome: witness found in {result.iterations} iterations")
        print(f"constraint residual: {result.density.residual:.3g}  "
              f"mass error: {result.density.mass_error:.3g}")
        print(f"weight range: [{result.density.weights.min():.6g}, "
              f"{result.density.weights.max():.6g}]")
        doc["residuals"] = {"constraint": result.density.residual,
                            "mass_error": result.density.mass_error}
        if args.report:
            doc["figures"] = [figures.weight_figure(
                result.density.weights, 0.0, result.density.weights.max(),
                _figure_path(args.report, "weights"))]
    else:
        print(f"outcome: no witness found (gap stagnated at {result.gap:.3g} "
              f"after {result.iterations} iterations)")
        doc["gap"] = result.gap
    return EXIT_OK, doc


def build_parser() -> _Parser:
    parser = _Parser(prog="cubesynth",
                     description="Differentially private synthetic 0/1 data "
                                 "by reweighting a fresh uniform sample.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="run the full pipeline on a dataset")
    g.add_argument("--input", required=True, help="true dataset (CSV or binary)")
    g.add_argument("--degree", type=int, required=True, help="marginal degree to match")
    g.add_argument("--m", type=int, required=True, help="reduced-space size")
    g.add_argument("--delta", type=float, default=0.05, help="lower weight slack")
    g.add_argument("--Delta", type=float, default=4.0, help="upper weight bound")
    g.add_argument("--k", type=int, default=None, help="synthetic record count")
    g.add_argument("--epsilon", type=float, default=None,
                   help="privacy target; sets k automatically")
    g.add_argument("--output", required=True, help="synthetic CSV output path")
    g.add_argument("--max-attempts", type=int, default=16)
    g.add_argument("--format", default="auto", choices=("auto", "csv", "binary"))
    g.add_argument("--evaluate", action="store_true",
                   help="embed an accuracy summary in the report")
    _add_common(g, seed_required=True)

    c = sub.add_parser("calibrate", help="recommended sizes from the closed forms")
    c.add_argument("--p", type=int, required=True)
    c.add_argument("--degree", type=int, required=True)
    c.add_argument("--gamma", type=float, required=True, help="failure budget")
    c.add_argument("--delta", type=float, default=None, help="accuracy slack")
    c.add_argument("--alpha", type=float, default=1.0)
    c.add_argument("--kappa", type=float, default=1.0)
    _add_common(c, seed_required=False)

    e = sub.add_parser("evaluate", help="marginal accuracy of one dataset against another")
    e.add_argument("--input", required=True, help="true dataset")
    e.add_argument("--synthetic", required=True, help="synthetic dataset")
    e.add_argument("--degree", type=int, required=True)
    e.add_argument("--format", default="auto", choices=("auto", "csv", "binary"))
    _add_common(e, seed_required=False)

    a = sub.add_parser("audit", help="sensitivity audit over neighboring datasets")
    a.add_argument("--input", required=True, help="base dataset")
    a.add_argument("--neighbor", default=None,
                   help="audit this dataset against the base instead of random appends")
    a.add_argument("--trials", type=int, default=20,
                   help="random append pairs when no neighbor file is given")
    a.add_argument("--degree", type=int, required=True)
    a.add_argument("--m", type=int, required=True)
    a.add_argument("--delta", type=float, default=0.05)
    a.add_argument("--Delta", type=float, default=4.0)
    a.add_argument("--max-attempts", type=int, default=16)
    a.add_argument("--format", default="auto", choices=("auto", "csv", "binary"))
    _add_common(a, seed_required=True)

    m = sub.add_parser("match", help="search for an exact marginal-matching reweighting")
    m.add_argument("--input", required=True)
    m.add_argument("--degree", type=int, required=True)
    m.add_argument("--m", type=int, required=True)
    m.add_argument("--max-attempts", type=int, default=16)
    m.add_argument("--format", default="auto", choices=("auto", "csv", "binary"))
    _add_common(m, seed_required=True)

    return parser


_DISPATCH = {
    "generate": _cmd_generate,
    "calibrate": _cmd_calibrate,
    "evaluate": _cmd_evaluate,
    "audit": _cmd_audit,
    "match": _cmd_match,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    report_path = None
    command = None
    try:
        args = parser.parse_args(argv)
        report_path = getattr(args, "report", None)
        command = args.command
        start = time.perf_counter()
        code, doc = _DISPATCH[args.command](args)
        doc.setdefault("timings", {})["total"] = time.perf_counter() - start
        _write_report(report_path, doc)
        return code
    except UsageError as exc:
        print(exc.usage, file=sys.stderr, end="")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, InputError, ConfigurationError) as exc:
        return _fail(exc, EXIT_USAGE, command, report_path)
    except ConditioningFailure as exc:
        return _fail(exc, EXIT_FAILURE, command, report_path)
    except (SolverError, IntegrityError, CubeSynthError) as exc:
        return _fail(exc, EXIT_SOLVER, command, report_path)


def _fail(exc: Exception, code: int, command: str | None, report_path: str | None) -> int:
    print(f"error: {exc}", file=sys.stderr)
    try:
        _write_report(report_path, {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "error": {"type": type(exc).__name__, "message": str(exc),
                      "exit_code": code},
        })
    except OSError:
        pass
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Exit codes: 0 success, 1 config error, 2 solver failure, 3 no equilibrium
weights found, 4 scan needs two consumers, 5 a verification check failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import economy as econ
from .config import ConfigError, load_config
from .errors import ConvergenceError, NoSolutionFound, TieError, UnsupportedEconomyError
from .negishi import NegishiConfig, solve_equilibrium_weights
from .potential import EquilibriumPoint, WelfareWeights, equilibrium_from_weights

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_NO_SOLUTION, EXIT_SCAN_SHAPE, EXIT_VERIFY = range(6)


def _floats(arr):
    return np.asarray(arr, dtype=float).tolist()


def point_report(point: EquilibriumPoint, normalization: str) -> dict:
    """JSON-ready view of an equilibrium; prices and incomes share one rescaling."""
    norm = econ.normalize_prices(point.p, normalization)
    factor = norm[0] / point.p[0]
    return {
        "alpha": _floats(point.alpha),
        "normalization": normalization,
        "prices": _floats(norm),
        "incomes": _floats(point.m * factor),
        "allocation": _floats(point.x),
        "raw_prices": _floats(point.p),
        "raw_incomes": _floats(point.m),
        "potential_residual": float(point.y_residual),
        "welfare": float(point.welfare),
        "dual_value": float(point.dual_value),
        "diagnostics": {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in point.diagnostics.items()},
    }


def _emit(doc):
    # repr-based float output round-trips exactly
    sys.stdout.write(json.dumps(doc, indent=2, allow_nan=True) + "\n")


def _parse_alpha(text: str, n: int) -> np.ndarray:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError("--alpha", "expected comma-separated numbers") from None
    if len(values) != n:
        raise ConfigError("--alpha", f"expected {n} weights, got {len(values)}")
    if any(not np.isfinite(v) or v <= 0 for v in values):
        raise ConfigError("--alpha", "weights must be positive")
    return WelfareWeights(values).values


def cmd_solve_weights(args) -> int:
    cfg = load_config(args.economy)
    alpha = _parse_alpha(args.alpha, cfg.economy.n_consumers)
    point = equilibrium_from_weights(cfg.economy, alpha)
    _emit(point_report(point, cfg.normalization))
    return EXIT_OK


def cmd_solve_endowments(args) -> int:
    cfg = load_config(args.economy)
    kwargs = {"starts": args.starts}
    if args.tol is not None:
        kwargs["tol"] = args.tol
    report = solve_equilibrium_weights(cfg.economy, NegishiConfig(**kwargs))
    doc = {
        "solutions": [
            {"start": s.start, "residual": float(s.residual), **point_report(s.point, cfg.normalization)}
            for s in report.solutions
        ],
        "starts": [
            {
                "start": t.start,
                "alpha0": _floats(t.alpha0),
                "alpha": _floats(t.alpha),
                "iterations": t.iterations,
                "residual": float(t.residual),
                "converged": t.converged,
            }
            for t in report.traces
        ],
        "dedup_radius": report.dedup_radius,
        "tol": report.tol,
    }
    _emit(doc)
    return EXIT_OK


SCAN_FIXED = ("u_1", "u_2", "v_1", "v_2", "W", "V")


def scan_header(k: int) -> list[str]:
    """CSV columns: alpha_1, raw prices, utilities, indirect utilities, W, V, allocation."""
    return (
        ["alpha_1"]
        + [f"p_{j + 1}" for j in range(k)]
        + list(SCAN_FIXED)
        + [f"x_{i + 1}_{j + 1}" for i in range(2) for j in range(k)]
    )


def scan_rows(economy: econ.Economy, n_points: int):
    k = economy.n_goods
    for j in range(1, n_points + 1):
        a1 = j / (n_points + 1)
        try:
            pt = equilibrium_from_weights(economy, [a1, 1.0 - a1])
        except (ConvergenceError, TieError):
            yield [repr(a1)] + [""] * (len(scan_header(k)) - 1)
            continue
        u = [econ.utility(spec, pt.x[i]) for i, spec in enumerate(economy.utilities)]
        v = [econ.indirect_utility(spec, pt.p, pt.m[i]) for i, spec in enumerate(economy.utilities)]
        values = [a1, *pt.p, *u, *v, pt.welfare, pt.dual_value, *pt.x.ravel()]
        yield [repr(float(x)) for x in values]


def cmd_scan(args) -> int:
    cfg = load_config(args.economy)
    if cfg.economy.n_consumers != 2:
        print("scan requires exactly two consumers", file=sys.stderr)
        return EXIT_SCAN_SHAPE
    if args.alpha_grid < 1:
        raise ConfigError("--alpha-grid", "expected a positive integer")
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(scan_header(cfg.economy.n_goods))
        for row in scan_rows(cfg.economy, args.alpha_grid):
            writer.writerow(row)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks

    cfg = load_config(args.economy)
    results = run_checks(cfg.economy, samples=args.samples, tol=args.tol, seed=args.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"verification failed: {failed[0].name}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="econpotential", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-weights", help="equilibrium for given welfare weights")
    p.add_argument("--economy", required=True)
    p.add_argument("--alpha", required=True, help="comma-separated positive weights")
    p.set_defaults(func=cmd_solve_weights)

    p = sub.add_parser("solve-endowments", help="all equilibria found for the configured endowments")
    p.add_argument("--economy", required=True)
    p.add_argument("--starts", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_solve_endowments)

    p = sub.add_parser("scan", help="CSV of equilibrium curves over an interior weight grid")
    p.add_argument("--economy", required=True)
    p.add_argument("--alpha-grid", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("verify", help="run the invariant battery")
    p.add_argument("--economy", required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoSolutionFound as exc:
        print(f"no equilibrium weights found: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    except (ConvergenceError, UnsupportedEconomyError, TieError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

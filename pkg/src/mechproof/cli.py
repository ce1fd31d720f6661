"""Command-line entry point.

Exit codes: 0 success/pass, 1 bad input, 2 no feasible mechanism,
3 verification (or repro suite) failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from .adversary import verify
from .config import ConfigError, RunConfig, load_config
from .experiments import GridTooLarge, grid_points, run_grid, run_suite, sweep_csv, SUITES
from .model import Mechanism, ModelError, as_rational
from .optimizer import SearchSpaceTooLarge, SolveReport, boundary_report, optimize, optimize_escalating

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_FAIL = 0, 1, 2, 3


def _exact(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def report_to_dict(report: SolveReport) -> dict:
    out: dict = {"status": report.status}
    if report.best is not None:
        out.update(
            n=list(report.best.n),
            t=[float(v) for v in report.best.t],
            t_exact=[_exact(v) for v in report.best.t],
            utility=float(report.utility),
            utility_exact=_exact(report.utility),
            slacks={k: float(v) for k, v in report.slacks.items()},
            boundary=list(boundary_report(report)),
        )
    out["search"] = {
        "n_max": report.n_max,
        "candidates_examined": report.candidates_examined,
        "candidates_collusion_filtered": report.candidates_collusion_filtered,
        "candidates_lp_infeasible": report.candidates_lp_infeasible,
        "candidates_pruned": report.candidates_pruned,
    }
    return out


def load_mechanism(path: str | Path, m: int) -> Mechanism:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict) or "n" not in data or ("t" not in data and "t_exact" not in data):
        raise ConfigError(f"{path}: mechanism needs 'n' and 't' arrays")
    t = data.get("t_exact", data.get("t"))
    if not isinstance(data["n"], list) or not isinstance(t, list):
        raise ConfigError(f"{path}: 'n' and 't' must be arrays")
    try:
        mech = Mechanism(tuple(data["n"]), tuple(as_rational(v) for v in t))
    except (ModelError, ValueError, TypeError, ZeroDivisionError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if mech.m != m:
        raise ConfigError(f"{path}: mechanism has {len(mech.n)} cases, config needs m+1={m + 1}")
    return mech


def _solve(cfg: RunConfig) -> SolveReport:
    run = optimize_escalating if cfg.auto_escalate else optimize
    return run(cfg.profile(), cfg.cost, cfg.revenue, cfg.search)


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    report = _solve(cfg)
    print(json.dumps(report_to_dict(report), indent=2))
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    mech = load_mechanism(args.mechanism, cfg.m)
    scope = "all" if cfg.search.collusion_check == "exhaustive" else "full_offload"
    report = verify(cfg.profile(), cfg.cost, mech, cfg.search.low_deviation_cost, scope)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    points = grid_points(cfg)
    results = run_grid(points, cfg.cost, cfg.revenue, cfg.search, cfg.auto_escalate)
    for r in results:
        if r.error:
            logging.warning("grid point %s: %s", r.point, r.error)
    text = sweep_csv(results)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return EXIT_OK


def cmd_repro(args) -> int:
    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ok = True
    for name in names:
        res = run_suite(name)
        (out / f"{name}.csv").write_text(res.csv)
        summary = res.summary()
        (out / f"{name}_summary.txt").write_text(summary)
        sys.stdout.write(summary)
        ok &= res.passed
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mechproof", description="Misreport- and collusion-proof crowdsourcing mechanisms."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="optimal mechanism for one configuration")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="search a mechanism for profitable deviations")
    p.add_argument("--config", required=True)
    p.add_argument("--mechanism", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="solve every point of the config's sweep grid, emit CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("repro", help="run a named reproduction suite")
    p.add_argument("--suite", required=True, choices=sorted(SUITES) + ["all"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_repro)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s"
    )
    try:
        return args.func(args)
    except (ConfigError, ModelError, GridTooLarge, SearchSpaceTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

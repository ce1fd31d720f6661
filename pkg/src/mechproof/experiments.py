"""Parameter sweeps and the named reproduction suites.

Grid points are solved in a process pool (size from ``MECHPROOF_THREADS``,
default: CPU count) and written back in axis order, so output is
byte-identical whatever order the workers finish in.
"""

from __future__ import annotations

import csv
import io
import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .adversary import regret_curve, sign_crossing
from .model import CostModel, ModelError, QualityProfile, RevenueModel
from .optimizer import (
    SearchConfig,
    SolveReport,
    boundary_report,
    optimize,
    optimize_escalating,
)

MAX_GRID_POINTS = 10**5
#: single-step dips allowed in monotone trend checks
TREND_TOL = Fraction(1, 10**9)


class GridTooLarge(ValueError):
    pass


def pool_size() -> int:
    env = os.environ.get("MECHPROOF_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValueError(f"MECHPROOF_THREADS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else repr(float(x))
    return repr(float(x))


@dataclass(frozen=True)
class GridPoint:
    m: int
    p: Fraction
    x_high: Fraction
    x_low: Fraction


@dataclass
class PointResult:
    point: GridPoint
    report: SolveReport | None
    boundary: tuple[int, ...] = ()
    error: str | None = None

    @property
    def feasible(self) -> bool:
        return self.report is not None and self.report.feasible

    @property
    def utility(self) -> Fraction | None:
        return self.report.utility if self.feasible else None


def _solve_point(args) -> PointResult:
    point, cost, revenue, search, escalate = args
    try:
        profile = QualityProfile(point.m, point.p, point.x_high, point.x_low)
        run = optimize_escalating if escalate else optimize
        report = run(profile, cost, revenue, search)
    except ModelError as exc:
        return PointResult(point, None, error=str(exc))
    return PointResult(point, report, boundary_report(report))


def run_grid(
    points: Sequence[GridPoint],
    cost: CostModel,
    revenue: RevenueModel,
    search: SearchConfig,
    auto_escalate: bool = False,
    threads: int | None = None,
) -> list[PointResult]:
    threads = pool_size() if threads is None else threads
    jobs = [(pt, cost, revenue, search, auto_escalate) for pt in points]
    if threads <= 1 or len(jobs) <= 1:
        return [_solve_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
        return list(pool.map(_solve_point, jobs))


def grid_points(cfg) -> list[GridPoint]:
    """Cartesian product of the sweep axes (each sorted), in m, p, x_high, x_low order."""
    axes = {
        "m": sorted(cfg.sweep.get("m", (cfg.m,))),
        "p": sorted(cfg.sweep.get("p", (cfg.p,))),
        "x_high": sorted(cfg.sweep.get("x_high", (cfg.x_high,))),
        "x_low": sorted(cfg.sweep.get("x_low", (cfg.x_low,))),
    }
    total = 1
    for vals in axes.values():
        total *= len(vals)
    if total > MAX_GRID_POINTS:
        raise GridTooLarge(f"sweep grid has {total} points, limit is {MAX_GRID_POINTS}")
    return [GridPoint(*combo) for combo in itertools.product(*axes.values())]


def sweep_rows(results: Sequence[PointResult]):
    cases = max((r.point.m for r in results), default=2) + 1
    header = (
        ["m", "p", "x_high", "x_low"]
        + [f"n_{j}" for j in range(1, cases + 1)]
        + [f"t_{j}" for j in range(1, cases + 1)]
        + ["utility", "feasible", "boundary_flag"]
    )
    rows = []
    for r in results:
        pt = r.point
        n = list(r.report.best.n) if r.feasible else []
        t = list(r.report.best.t) if r.feasible else []
        n += [None] * (cases - len(n))
        t += [None] * (cases - len(t))
        rows.append(
            [fmt(pt.m), fmt(pt.p), fmt(pt.x_high), fmt(pt.x_low)]
            + [fmt(v) for v in n]
            + [fmt(v) for v in t]
            + [fmt(r.utility), fmt(r.feasible), fmt(bool(r.boundary))]
        )
    return header, rows


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def sweep_csv(results: Sequence[PointResult]) -> str:
    return to_csv(*sweep_rows(results))


# -- trend checks -----------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""
    gating: bool = True

    def line(self, suite: str) -> str:
        tag = ("PASS" if self.passed else "FAIL") if self.gating else ("info" if self.passed else "INFO")
        detail = f" ({self.detail})" if self.detail else ""
        return f"{tag} {suite}: {self.name}{detail}"


def non_decreasing(values: Sequence, tol=TREND_TOL) -> bool:
    return all(b >= a - tol for a, b in zip(values, values[1:]))


def non_increasing(values: Sequence, tol=TREND_TOL) -> bool:
    return non_decreasing([-v for v in values], tol)


def _series(values) -> str:
    return ", ".join("n/a" if v is None else f"{float(v):.4g}" for v in values)


def _monotone_check(name, values, increasing=True, gating=True) -> Check:
    if any(v is None for v in values):
        return Check(name, False, "infeasible point: " + _series(values), gating)
    ok = non_decreasing(values) if increasing else non_increasing(values)
    return Check(name, ok, _series(values), gating)


# -- reproduction suites ----------------------------------------------------

P_AXIS = tuple(Fraction(k, 10) for k in range(1, 10))
PRESET_SEARCH = SearchConfig(collusion_check="equal_split_bound")
PRESET_COST = CostModel.exp2minus1()
PRESET_REVENUE = RevenueModel.quadratic()


@dataclass
class SuiteResult:
    name: str
    csv: str
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.gating)

    def summary(self) -> str:
        lines = [c.line(self.name) for c in self.checks]
        lines.append(f"{'PASS' if self.passed else 'FAIL'} {self.name}: suite")
        return "\n".join(lines) + "\n"


def _preset_grid(points, threads):
    return run_grid(points, PRESET_COST, PRESET_REVENUE, PRESET_SEARCH, auto_escalate=True, threads=threads)


def _lookup(results):
    return {(r.point.m, r.point.p, r.point.x_high, r.point.x_low): r.utility for r in results}


def suite_fig2a(threads=None) -> SuiteResult:
    x_highs = (Fraction(5), Fraction(13), Fraction(21))
    pts = [GridPoint(2, p, xh, Fraction(1)) for p in P_AXIS for xh in x_highs]
    res = _preset_grid(pts, threads)
    u = _lookup(res)
    checks = []
    for xh in x_highs:
        checks.append(
            _monotone_check(f"utility non-decreasing in p at x_high={xh}", [u[2, p, xh, 1] for p in P_AXIS])
        )
    incr = []
    for xh in x_highs:
        lo, hi = u[2, P_AXIS[0], xh, 1], u[2, P_AXIS[-1], xh, 1]
        incr.append(None if lo is None or hi is None else hi - lo)
    checks.append(_monotone_check("utility(0.9)-utility(0.1) non-decreasing in x_high", incr))
    for p in P_AXIS:
        checks.append(
            _monotone_check(
                f"utility non-increasing in x_high at p={float(p)}",
                [u[2, p, xh, 1] for xh in x_highs],
                increasing=False,
            )
        )
    return SuiteResult("fig2a", sweep_csv(res), checks)


def suite_fig2b(threads=None) -> SuiteResult:
    x_lows = (Fraction(1), Fraction(6), Fraction(11))
    pts = [GridPoint(2, p, Fraction(21), xl) for p in P_AXIS for xl in x_lows]
    res = _preset_grid(pts, threads)
    u = _lookup(res)
    checks = []
    for xl in x_lows:
        checks.append(
            _monotone_check(
                f"utility non-decreasing in p at x_low={xl}",
                [u[2, p, 21, xl] for p in P_AXIS],
                gating=False,
            )
        )
    for p in P_AXIS:
        checks.append(
            _monotone_check(
                f"utility non-decreasing in x_low at p={float(p)}", [u[2, p, 21, xl] for xl in x_lows]
            )
        )
    incr = []
    for xl in x_lows:
        lo, hi = u[2, P_AXIS[0], 21, xl], u[2, P_AXIS[-1], 21, xl]
        incr.append(None if lo is None or hi is None else hi - lo)
    checks.append(
        _monotone_check(
            "utility(0.9)-utility(0.1) non-increasing in x_low (larger gap, larger increment)",
            incr,
            increasing=False,
            gating=False,
        )
    )
    return SuiteResult("fig2b", sweep_csv(res), checks)


FOOTNOTE_N = (1, 4, 3)
FOOTNOTE_P = tuple(Fraction(k, 20) for k in range(1, 20))
CROSSING_WINDOW = (Fraction(1, 4), Fraction(11, 20))


def footnote_curve(ps=FOOTNOTE_P):
    profile = QualityProfile(2, Fraction(1, 2), 9, 1)
    return regret_curve(profile, PRESET_COST, FOOTNOTE_N, ps, include_ic_high=False)


def suite_footnote_lying(threads=None) -> SuiteResult:
    curve = footnote_curve()
    header = ["p", "n_1", "n_2", "n_3", "t_1", "t_2", "t_3", "ic_high_gain"]
    rows = [
        [fmt(pt.p)] + [fmt(v) for v in FOOTNOTE_N] + [fmt(v) for v in pt.t] + [fmt(pt.gain)]
        for pt in curve
    ]
    by_p = {pt.p: pt.gain for pt in curve}
    g_lo, g_hi = by_p[Fraction(1, 10)], by_p[Fraction(9, 10)]
    crossing = sign_crossing(curve)
    lo, hi = CROSSING_WINDOW
    checks = [
        Check("high-type lying gain positive at p=0.1", g_lo > 0, f"gain={float(g_lo):.4g}"),
        Check("high-type lying gain negative at p=0.9", g_hi < 0, f"gain={float(g_hi):.4g}"),
        Check(
            f"sign crossing inside [{float(lo)}, {float(hi)}]",
            crossing is not None and lo <= crossing <= hi,
            "no crossing" if crossing is None else f"crossing at p={float(crossing):.4f}",
        ),
    ]
    return SuiteResult("footnote_lying", to_csv(header, rows), checks)


def _fig3(name, x_high, x_low, crossover_gating, threads) -> SuiteResult:
    xh, xl = Fraction(x_high), Fraction(x_low)
    pts = [GridPoint(m, p, xh, xl) for m in (2, 3) for p in P_AXIS]
    res = _preset_grid(pts, threads)
    u = _lookup(res)
    checks = []
    for m in (2, 3):
        checks.append(
            _monotone_check(f"m={m} utility non-decreasing in p", [u[m, p, xh, xl] for p in P_AXIS])
        )
    u2_4, u3_4 = u[2, Fraction(2, 5), xh, xl], u[3, Fraction(2, 5), xh, xl]
    u2_9, u3_9 = u[2, Fraction(9, 10), xh, xl], u[3, Fraction(9, 10), xh, xl]
    have = None not in (u2_4, u3_4, u2_9, u3_9)
    checks.append(
        Check(
            "two workers at least as good as three at p=0.4",
            have and u3_4 - u2_4 <= 0,
            f"U2={_series([u2_4])}, U3={_series([u3_4])}",
            crossover_gating,
        )
    )
    checks.append(
        Check(
            "three workers better than two at p=0.9",
            have and u3_9 - u2_9 > 0,
            f"U2={_series([u2_9])}, U3={_series([u3_9])}",
            crossover_gating,
        )
    )
    return SuiteResult(name, sweep_csv(res), checks)


def suite_fig3a(threads=None) -> SuiteResult:
    return _fig3("fig3a", 80, 20, True, threads)


def suite_fig3b(threads=None) -> SuiteResult:
    return _fig3("fig3b", 50, 10, False, threads)


def ntable_regimes():
    """(regime, GridPoint) pairs for the six task-count panels."""
    out = []
    x_lows = tuple(Fraction(v) for v in (1, 5, 9, 13, 17))
    for dx in (4, 18):
        for p in P_AXIS:
            for xl in x_lows:
                out.append((f"delta_x={dx}", GridPoint(2, p, xl + dx, xl)))
    for p in (Fraction(1, 5), Fraction(9, 10)):
        for xh in (Fraction(v) for v in (6, 10, 14, 18, 22)):
            for dx in (1, 2, 4, 8, 16):
                if dx < xh:
                    out.append((f"p={float(p)}", GridPoint(2, p, xh, xh - dx)))
    for xh in (Fraction(4), Fraction(18)):
        for p in P_AXIS:
            for dx in range(1, int(xh)):
                if xh == 18 and dx % 4 != 1:
                    continue
                out.append((f"x_high={xh}", GridPoint(2, p, xh, xh - dx)))
    return out


def suite_ntable(threads=None) -> SuiteResult:
    regimes = ntable_regimes()
    res = _preset_grid([pt for _, pt in regimes], threads)
    header, rows = sweep_rows(res)
    header = ["regime", "delta_x"] + header
    rows = [
        [label, fmt(pt.x_high - pt.x_low)] + row for (label, pt), row in zip(regimes, rows)
    ]
    checks = [
        Check(
            "every regime point feasible",
            all(r.feasible for r in res),
            f"{sum(r.feasible for r in res)}/{len(res)} feasible",
        )
    ]
    # task-count trends are reported, not enforced: integer n makes them step-wise
    trend_specs = [("n_1", 0, True), ("n_2", 1, True), ("n_3", 2, False)]
    for label in ("delta_x=4", "delta_x=18", "x_high=4", "x_high=18"):
        sub = [(pt, r) for (lab, pt), r in zip(regimes, res) if lab == label]
        for col, idx, inc in trend_specs:
            ok = True
            for key in sorted({pt.x_high - pt.x_low if label.startswith("x_high") else pt.x_low for pt, _ in sub}):
                series = [
                    r.report.best.n[idx]
                    for pt, r in sub
                    if r.feasible
                    and (pt.x_high - pt.x_low if label.startswith("x_high") else pt.x_low) == key
                ]
                ok &= non_decreasing(series, 0) if inc else non_increasing(series, 0)
            word = "non-decreasing" if inc else "non-increasing"
            checks.append(Check(f"{label}: {col} {word} in p", ok, gating=False))
    return SuiteResult("ntable", to_csv(header, rows), checks)


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "fig2a": suite_fig2a,
    "fig2b": suite_fig2b,
    "footnote_lying": suite_footnote_lying,
    "fig3a": suite_fig3a,
    "fig3b": suite_fig3b,
    "ntable": suite_ntable,
}


def run_suite(name: str, threads: int | None = None) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](threads=threads)


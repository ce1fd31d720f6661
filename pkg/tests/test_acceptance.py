"""Acceptance criteria, one test each, at the stated tolerances.

Each test records a PASS/FAIL line that is echoed in the pytest summary.
"""

import itertools
import random
import time
from fractions import Fraction as F

import pytest

from conftest import record
from mechproof.adversary import verify
from mechproof.constraints import build_rows, collusion_proof, equal_split_bound_gain
from mechproof.experiments import SUITES, non_decreasing, non_increasing, run_suite
from mechproof.lp import solve
from mechproof.model import (
    CostModel,
    Mechanism,
    QualityProfile,
    RevenueModel,
    case_probabilities,
    requestor_expected_utility,
)
from mechproof.optimizer import SearchConfig, optimize

from oracles import grid_lp

EXP = CostModel.exp2minus1()
QUAD = RevenueModel.quadratic()
COSTS = (EXP, CostModel.power(2), CostModel.power(3))
P_AXIS = tuple(F(k, 10) for k in range(1, 10))


@pytest.fixture(scope="module")
def suites():
    return {name: run_suite(name) for name in sorted(SUITES)}


def utilities(result):
    """(m, p, x_high, x_low) -> utility from a sweep CSV."""
    lines = result.csv.strip().split("\n")
    header = lines[0].split(",")
    out = {}
    for line in lines[1:]:
        row = dict(zip(header, line.split(",")))
        key = (int(row["m"]), F(row["p"]), F(row["x_high"]), F(row["x_low"]))
        out[key] = F(row["utility"]) if row["utility"] else None
    return out


def test_criterion_1_end_to_end_soundness():
    rng = random.Random(2024)
    start = time.perf_counter()
    feasible, worst, failures = 0, F(0), []
    for _ in range(200):
        m = rng.choice([2, 3])
        p = F(rng.randint(5, 95), 100)
        xl = F(rng.randint(10, 200), 10)
        xh = xl + F(rng.randint(1, 800), 10)
        cost = rng.choice(COSTS)
        prof = QualityProfile(m, p, xh, xl)
        report = optimize(prof, cost, QUAD, SearchConfig(n_max=10))
        if not report.feasible:
            continue
        feasible += 1
        check = verify(prof, cost, report.best)
        worst = max(worst, check.worst_gain)
        if not check.passed:
            failures.append((prof, report.best.n))
    elapsed = time.perf_counter() - start
    ok = not failures and worst <= 1e-9 and elapsed < 300
    record(
        1,
        ok,
        f"{feasible}/200 instances feasible, all certified={not failures}, "
        f"worst gain {float(worst):.3g}, {elapsed:.0f}s",
    )
    assert ok, failures[:3]


def test_criterion_2_lp_matches_grid_oracle():
    rng = random.Random(77)
    start = time.perf_counter()
    worst, compared, mismatched = 0.0, 0, []
    while compared < 100:
        xl = F(rng.randint(1, 20))
        prof = QualityProfile(2, F(rng.randint(5, 95), 100), xl + rng.randint(1, 80), xl)
        cost = rng.choice(COSTS)
        n = tuple(rng.randint(1, 10) for _ in range(3))
        system = build_rows(prof, cost, n)
        probs = case_probabilities(prof).probs
        out = solve(system, probs)
        ref = grid_lp(system.rows, probs)
        compared += 1
        if out.optimal != (ref is not None):
            mismatched.append(n)
            continue
        if out.optimal:
            worst = max(worst, abs(float(out.objective) - ref))
    elapsed = time.perf_counter() - start
    ok = not mismatched and worst <= 1e-6 and elapsed < 120
    record(2, ok, f"100 candidates, max |LP - grid| = {worst:.2g}, status mismatches {len(mismatched)}, {elapsed:.0f}s")
    assert ok


def test_criterion_3_equal_split_bound():
    """Integer divisions of offloaded tasks among the low workers never cost less
    than the fractional equal division (the quantity the bound is built on)."""
    violations, checked, partial_beats_full = 0, 0, 0
    prof = QualityProfile(3, F(1, 2), 9, 1)
    xh, xl = prof.x_high, prof.x_low
    for cost in COSTS:
        for n_c in range(1, 9):
            for lows in (1, 2):
                highs = 3 - lows
                full_gain, honest = equal_split_bound_gain(prof, cost, lows, n_c)
                for off in itertools.product(range(n_c + 1), repeat=highs):
                    K = sum(off)
                    high_part = sum(cost.f(n_c - k) * xh for k in off)
                    fractional = high_part + lows * cost.f(n_c + F(K, lows)) * xl
                    for e1 in range(K + 1):
                        extras = (e1,) if lows == 1 else (e1, K - e1)
                        if lows == 1 and e1 != K:
                            continue
                        integer = high_part + sum(cost.f(n_c + e) * xl for e in extras)
                        checked += 1
                        if integer < fractional - 1e-9 * max(1, abs(float(fractional))):
                            violations += 1
                        if honest - integer > max(full_gain, 0):
                            partial_beats_full += 1
    ok = violations == 0
    record(
        3,
        ok,
        f"{violations} violations over {checked} integer splits (m=3, n<=8, 3 convex f); "
        f"partial offloads beating the all-offloaded split: {partial_beats_full}",
    )
    assert ok


def test_criterion_4_fig2a_trend(suites):
    u = utilities(suites["fig2a"])
    bad = []
    incr = []
    for xh in (5, 13, 21):
        series = [u[2, p, F(xh), F(1)] for p in P_AXIS]
        if None in series or not non_decreasing(series):
            bad.append(f"x_high={xh}: {[float(v) if v is not None else None for v in series]}")
        else:
            incr.append(series[-1] - series[0])
    ok = not bad and len(incr) == 3 and non_decreasing(incr)
    detail = "; ".join(bad) or f"increments {[float(v) for v in incr]}"
    record(4, ok, f"utility non-decreasing in p for x_high in (5, 13, 21); {detail}")
    assert ok


def test_criterion_5_fig2_quality_trends(suites):
    ub = utilities(suites["fig2b"])
    ua = utilities(suites["fig2a"])
    bad = []
    for p in P_AXIS:
        series = [ub[2, p, F(21), F(xl)] for xl in (1, 6, 11)]
        if None in series or not non_decreasing(series):
            bad.append(f"x_low trend at p={float(p)}")
        series = [ua[2, p, F(xh), F(1)] for xh in (5, 13, 21)]
        if None in series or not non_increasing(series):
            bad.append(f"x_high trend at p={float(p)}: {[float(v) for v in series if v is not None]}")
    ok = not bad
    record(5, ok, "utility up in x_low (x_high=21) and down in x_high (x_low=1)" + (f"; broken: {bad}" if bad else ""))
    assert ok, bad


def test_criterion_6_footnote_threshold(suites):
    res = suites["footnote_lying"]
    lines = res.csv.strip().split("\n")[1:]
    gains = {F(r.split(",")[0]): F(r.split(",")[-1]) for r in lines}
    crossing = None
    ps = sorted(gains)
    for a, b in zip(ps, ps[1:]):
        if gains[a] > 0 >= gains[b]:
            crossing = a + (b - a) * gains[a] / (gains[a] - gains[b])
            break
    ok = (
        gains[F(1, 10)] > 0
        and gains[F(9, 10)] < 0
        and crossing is not None
        and F(1, 4) <= crossing <= F(11, 20)
    )
    record(
        6,
        ok,
        f"gain {float(gains[F(1, 10)]):.4g} at p=0.1, {float(gains[F(9, 10)]):.4g} at p=0.9, "
        f"crossing at p={float(crossing) if crossing is not None else 'none'}",
    )
    assert ok


def test_criterion_7_fig3a_crossover(suites):
    res = suites["fig3a"]
    u = utilities(res)
    flagged = [line for line in res.csv.strip().split("\n")[1:] if line.endswith(",true")]
    u2_4, u3_4 = u[2, F(2, 5), F(80), F(20)], u[3, F(2, 5), F(80), F(20)]
    u2_9, u3_9 = u[2, F(9, 10), F(80), F(20)], u[3, F(9, 10), F(80), F(20)]
    ok = None not in (u2_4, u3_4, u2_9, u3_9) and u3_4 - u2_4 <= 0 and u3_9 - u2_9 > 0 and not flagged
    record(
        7,
        ok,
        f"p=0.4: U2={float(u2_4):.4g} U3={float(u3_4):.4g}; p=0.9: U2={float(u2_9):.4g} U3={float(u3_9):.4g}; "
        f"boundary rows {len(flagged)}",
    )
    assert ok


def test_criterion_8_worked_instance():
    prof = QualityProfile(2, F(1, 2), 2, 1)
    system = build_rows(prof, EXP, (1, 1, 1))
    rows = {r.label: (tuple(4 * c for c in r.coeffs), 4 * r.rhs) for r in system.rows}
    rows_ok = rows == {
        "IR_HIGH": ((1, 1, 0), 0),
        "IR_LOW": ((0, 1, 1), 0),
        "IC_HIGH": ((1, 0, -1), -2),
        "IC_LOW": ((-1, 0, 1), 2),
    }
    out = solve(system, case_probabilities(prof).probs)
    lp_ok = out.t_star == (0, 0, 2) and out.objective == F(1, 2)
    utility = requestor_expected_utility(prof, QUAD, Mechanism((1, 1, 1), out.t_star))
    honest = EXP.f(1) * 2 + EXP.f(1) * 1
    k1 = EXP.f(0) * 2 + EXP.f(2) * 1
    check = collusion_proof(prof, EXP, (1, 1, 1))
    collusion_ok = check.ok and honest == k1 and check.case_gains[2] == 0
    ok = rows_ok and lp_ok and utility == -1 and collusion_ok
    record(
        8,
        ok,
        f"rows match={rows_ok}, t*={tuple(map(str, out.t_star))}, objective={out.objective}, "
        f"utility={utility}, collusion k=1 cost {k1} vs honest {honest}",
    )
    assert ok


def test_criterion_9_determinism(suites):
    differing = [name for name in sorted(SUITES) if run_suite(name).csv != suites[name].csv]
    ok = not differing
    record(9, ok, f"{len(SUITES)} suites re-run, byte-identical CSV" + (f"; differ: {differing}" if differing else ""))
    assert ok

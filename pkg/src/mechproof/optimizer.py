"""Exhaustive integer search over task allocations.

For every ``n`` in ``{1..n_max}^(m+1)`` the optimizer drops allocations that
admit profitable collusion, solves the reward LP, and keeps the allocation
with the highest requestor utility (ties: lexicographically smallest ``n``).

Candidates are visited in decreasing order of a per-allocation upper bound on
utility: summing the two participation rows shows ``sum_j p_j t_j`` can never
fall below the sum of their right-hand sides.  Once that bound drops strictly
below the incumbent, no later candidate can win or tie, so the search stops.
The result is identical to the unpruned scan (``prune=False``).
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .constraints import (
    COLLUSION_METHODS,
    LOW_DEVIATION_COSTS,
    CollusionTable,
    ConstraintSystem,
    build_rows,
    residuals,
)
from .lp import min_expected_reward, solve
from .model import (
    CostModel,
    Mechanism,
    ModelError,
    QualityProfile,
    RevenueModel,
    case_probabilities,
    requestor_expected_utility,
    type_weights,
)

log = logging.getLogger(__name__)

MAX_SEARCH_SPACE = 10**6
ESCALATION_CAP = 20


class SearchSpaceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    n_max: int = 12
    include_ic_high: bool = True
    low_deviation_cost: str = "own_type"
    t_bound: Fraction | None = None
    collusion_check: str = "exhaustive"
    exact: bool = True
    prune: bool = True

    def __post_init__(self):
        if isinstance(self.n_max, bool) or not isinstance(self.n_max, int) or self.n_max < 1:
            raise ModelError(f"n_max must be an integer >= 1, got {self.n_max!r}")
        if self.low_deviation_cost not in LOW_DEVIATION_COSTS:
            raise ModelError(f"unknown low_deviation_cost {self.low_deviation_cost!r}")
        if self.collusion_check not in COLLUSION_METHODS:
            raise ModelError(f"unknown collusion_check {self.collusion_check!r}")
        if self.t_bound is not None and self.t_bound <= 0:
            raise ModelError(f"t_bound must be positive, got {self.t_bound}")


@dataclass
class SolveReport:
    status: str  # "optimal" | "no_feasible_mechanism"
    best: Mechanism | None
    utility: Fraction | None
    n_max: int
    candidates_examined: int = 0
    candidates_collusion_filtered: int = 0
    candidates_lp_infeasible: int = 0
    candidates_pruned: int = 0
    slacks: dict[str, Fraction] = field(default_factory=dict)
    box_active: tuple[int, ...] = ()

    @property
    def feasible(self) -> bool:
        return self.status == "optimal"


def reward_system(profile, cost, n, config: SearchConfig) -> ConstraintSystem:
    system = build_rows(profile, cost, n, config.low_deviation_cost)
    if not config.include_ic_high:
        system = system.without("IC_HIGH")
    return system


def _upper_bound_terms(profile, cost, revenue, n_max):
    """Per-case contributions to the utility upper bound, indexed [case][n-1].

    Utility = sum_j p_j (R_j - task pay_j) - m sum_j p_j t_j and the IR rows give
    sum_j p_j t_j >= -(sum of honest-type surpluses before rewards).
    """
    m = profile.m
    probs = case_probabilities(profile).probs
    w_high, w_low = type_weights(profile)
    xh, xl = profile.x_high, profile.x_low
    terms = []
    for j in range(1, m + 2):
        col = []
        for v in range(1, n_max + 1):
            task_pay = v * ((m + 1 - j) * xh + (j - 1) * xl)
            g = probs[j - 1] * (revenue.revenue(profile, j, v) - task_pay)
            fv = cost.f(v)
            surplus = Fraction(0)
            if j <= m:
                surplus += w_high[j - 1] * (v * xh - fv * xh)
            if j >= 2:
                surplus += w_low[j - 2] * (v * xl - fv * xl)
            col.append(g + m * surplus)
        terms.append(col)
    return terms


def _base_utility(profile, revenue, n, probs):
    m = profile.m
    xh, xl = profile.x_high, profile.x_low
    return sum(
        (
            probs[j - 1]
            * (revenue.revenue(profile, j, v) - v * ((m + 1 - j) * xh + (j - 1) * xl))
            for j, v in enumerate(n, start=1)
        ),
        Fraction(0),
    )


def optimize(
    profile: QualityProfile,
    cost: CostModel,
    revenue: RevenueModel,
    config: SearchConfig | None = None,
) -> SolveReport:
    config = config or SearchConfig()
    revenue.check_cases(profile.m)
    m = profile.m
    size = config.n_max ** (m + 1)
    if size > MAX_SEARCH_SPACE:
        raise SearchSpaceTooLarge(
            f"search space n_max^(m+1) = {config.n_max}^{m + 1} = {size} exceeds {MAX_SEARCH_SPACE}"
        )
    probs = case_probabilities(profile).probs
    collusion = CollusionTable(profile, cost, config.collusion_check)
    report = SolveReport("no_feasible_mechanism", None, None, config.n_max, candidates_examined=size)

    grid = itertools.product(range(1, config.n_max + 1), repeat=m + 1)
    if config.prune:
        terms = _upper_bound_terms(profile, cost, revenue, config.n_max)
        keyed = []
        for n in grid:
            if not collusion(n):
                report.candidates_collusion_filtered += 1
                continue
            ub = sum((terms[j][v - 1] for j, v in enumerate(n)), Fraction(0))
            keyed.append((-ub, n))
        keyed.sort()
        order = keyed
    else:
        order = []
        for n in grid:
            if not collusion(n):
                report.candidates_collusion_filtered += 1
                continue
            order.append((None, n))

    best_key = None
    best_n = None
    for idx, (neg_ub, n) in enumerate(order):
        if best_key is not None and neg_ub is not None and -neg_ub < -best_key[0]:
            report.candidates_pruned = len(order) - idx
            break
        system = reward_system(profile, cost, n, config)
        res = min_expected_reward(system, probs, exact=config.exact, t_bound=config.t_bound)
        if res.status != "optimal":
            report.candidates_lp_infeasible += 1
            continue
        utility = _base_utility(profile, revenue, n, probs) - m * res.objective
        key = (-utility, n)
        if best_key is None or key < best_key:
            best_key, best_n = key, n

    if best_n is None:
        return report
    system = reward_system(profile, cost, best_n, config)
    outcome = solve(system, probs, exact=config.exact, t_bound=config.t_bound)
    mech = Mechanism(
        best_n,
        outcome.t_star if config.exact else tuple(Fraction(v) for v in outcome.t_star),
        meta={"profile": profile, "cost": cost, "revenue": revenue, "config": config},
    )
    report.status = "optimal"
    report.best = mech
    report.utility = requestor_expected_utility(profile, revenue, mech)
    report.slacks = residuals(build_rows(profile, cost, best_n, config.low_deviation_cost), mech.t)
    report.box_active = outcome.box_active
    log.debug("optimize m=%d p=%s -> n=%s utility=%s", m, profile.p, best_n, report.utility)
    return report


def boundary_report(report: SolveReport) -> tuple[int, ...]:
    """1-based case indices whose optimal ``n_j`` sits on the search bound."""
    if report.best is None:
        return ()
    return tuple(j for j, v in enumerate(report.best.n, start=1) if v == report.n_max)


def optimize_escalating(
    profile: QualityProfile,
    cost: CostModel,
    revenue: RevenueModel,
    config: SearchConfig | None = None,
    cap: int = ESCALATION_CAP,
    step: int = 4,
) -> SolveReport:
    """Re-run with a larger ``n_max`` while the optimum touches the bound."""
    config = config or SearchConfig()
    report = optimize(profile, cost, revenue, config)
    while boundary_report(report) and config.n_max < cap:
        n_next = min(cap, config.n_max + step)
        if n_next ** (profile.m + 1) > MAX_SEARCH_SPACE:
            break
        config = replace(config, n_max=n_next)
        log.info("boundary hit at n_max=%d, escalating to %d", report.n_max, n_next)
        report = optimize(profile, cost, revenue, config)
    return report


"""Brute-force deviation search used to certify mechanisms.

Nothing here reuses the constraint rows or the closed-form type weights:
misreport utilities come from enumerating every type vector of the other
workers, and collusion gains from enumerating task splits directly.  A bug in
:mod:`mechproof.constraints` therefore cannot certify itself.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .model import (
    EPS,
    CostModel,
    Mechanism,
    QualityProfile,
    RevenueModel,
)

SAMPLED_SPLITS = 10_000


@dataclass(frozen=True)
class CollusionFinding:
    """Best split found for one mixed case (1-based ``case``)."""

    case: int
    high_offloads: tuple[int, ...]
    low_extras: tuple[int, ...]
    gain: Fraction | float


@dataclass
class DeviationReport:
    misreport_high: Fraction
    misreport_low: Fraction
    participation_high: Fraction
    participation_low: Fraction
    collusion: list[CollusionFinding] = field(default_factory=list)
    collusion_coverage: str = "exhaustive"
    worst_gain: Fraction | float = Fraction(0)
    verdict: str = "pass"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "worst_gain": float(self.worst_gain),
            "misreport_high": float(self.misreport_high),
            "misreport_low": float(self.misreport_low),
            "participation_high": float(self.participation_high),
            "participation_low": float(self.participation_low),
            "collusion_coverage": self.collusion_coverage,
            "collusion": [
                {
                    "case": c.case,
                    "high_offloads": list(c.high_offloads),
                    "low_extras": list(c.low_extras),
                    "gain": float(c.gain),
                }
                for c in self.collusion
            ],
        }


def _type_vectors(m: int, p: Fraction) -> Iterator[tuple[int, Fraction]]:
    """(number of high workers, probability) for every type vector of ``m`` workers."""
    for vec in itertools.product((True, False), repeat=m):
        prob = Fraction(1)
        for is_high in vec:
            prob *= p if is_high else 1 - p
        yield sum(vec), prob


def _case_of(m: int, highs: int) -> int:
    return m + 1 - highs


def worker_utility(
    profile: QualityProfile,
    cost: CostModel,
    mech: Mechanism,
    own: str,
    report: str,
    low_deviation_cost: str = "own_type",
) -> Fraction:
    """Joint-probability-weighted utility of one worker, by enumeration.

    The worker's own type probability is included, matching the weighting of
    the participation and incentive rows.
    """
    m, p = profile.m, profile.p
    own_prob = p if own == "high" else 1 - p
    x_claim = profile.quality(report)
    if own == "low" and report == "high" and low_deviation_cost == "claimed_type":
        x_cost = profile.x_high
    else:
        x_cost = profile.quality(own)
    total = Fraction(0)
    for others_high, prob in _type_vectors(m - 1, p):
        reported_highs = others_high + (1 if report == "high" else 0)
        j = _case_of(m, reported_highs)
        n_j, t_j = mech.n[j - 1], mech.t[j - 1]
        total += own_prob * prob * (n_j * x_claim + t_j - cost.f(n_j) * x_cost)
    return total


def requestor_utility(profile: QualityProfile, revenue: RevenueModel, mech: Mechanism) -> Fraction:
    """Requestor utility by enumerating every worker type vector."""
    m = profile.m
    total = Fraction(0)
    for highs, prob in _type_vectors(m, profile.p):
        j = _case_of(m, highs)
        n_j, t_j = mech.n[j - 1], mech.t[j - 1]
        paid = highs * (n_j * profile.x_high + t_j) + (m - highs) * (n_j * profile.x_low + t_j)
        total += prob * (revenue.revenue(profile, j, n_j) - paid)
    return total


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _splits(n_c, highs, lows, full_offload, rng: random.Random | None):
    if rng is None:
        offload_iter = (
            [(n_c,) * highs] if full_offload else itertools.product(range(n_c + 1), repeat=highs)
        )
        for off in offload_iter:
            for extras in _compositions(sum(off), lows):
                yield off, extras
        return
    for _ in range(SAMPLED_SPLITS):
        off = (n_c,) * highs if full_offload else tuple(rng.randint(0, n_c) for _ in range(highs))
        K = sum(off)
        cuts = sorted(rng.randint(0, K) for _ in range(lows - 1))
        bounds = [0] + cuts + [K]
        yield off, tuple(b - a for a, b in zip(bounds, bounds[1:]))


def collusion_scan(
    profile: QualityProfile,
    cost: CostModel,
    mech: Mechanism,
    scope: str = "all",
    exhaustive_limit: int = 3,
    seed: int = 0,
) -> tuple[list[CollusionFinding], str]:
    """Best colluding split per mixed case.

    ``scope="all"`` lets every high worker hand over any number of its tasks;
    ``scope="full_offload"`` only considers high workers handing over all of
    them.  Splits are enumerated exhaustively for ``m <= exhaustive_limit`` and
    sampled otherwise.
    """
    if scope not in ("all", "full_offload"):
        raise ValueError(f"unknown collusion scope {scope!r}")
    m = profile.m
    xh, xl = profile.x_high, profile.x_low
    sampled = m > exhaustive_limit
    rng = random.Random(seed) if sampled else None
    findings = []
    for lows in range(1, m):
        highs = m - lows
        case = lows + 1
        n_c = mech.n[case - 1]
        honest = highs * cost.f(n_c) * xh + lows * cost.f(n_c) * xl
        best = (Fraction(0), (0,) * highs, (0,) * lows)
        for off, extras in _splits(n_c, highs, lows, scope == "full_offload", rng):
            colluding = sum(cost.f(n_c - k) * xh for k in off) + sum(
                cost.f(n_c + e) * xl for e in extras
            )
            gain = honest - colluding
            if gain > best[0]:
                best = (gain, off, extras)
        findings.append(CollusionFinding(case, best[1], best[2], best[0]))
    coverage = "bounded + sampled" if sampled else "exhaustive"
    if scope == "full_offload":
        coverage += " (full offload only)"
    return findings, coverage


def verify(
    profile: QualityProfile,
    cost: CostModel,
    mech: Mechanism,
    low_deviation_cost: str = "own_type",
    collusion_scope: str = "all",
    eps: float = EPS,
) -> DeviationReport:
    mech.check_profile(profile)
    honest_high = worker_utility(profile, cost, mech, "high", "high")
    honest_low = worker_utility(profile, cost, mech, "low", "low")
    lie_high = worker_utility(profile, cost, mech, "high", "low")
    lie_low = worker_utility(profile, cost, mech, "low", "high", low_deviation_cost)
    findings, coverage = collusion_scan(profile, cost, mech, collusion_scope)
    report = DeviationReport(
        misreport_high=lie_high - honest_high,
        misreport_low=lie_low - honest_low,
        participation_high=honest_high,
        participation_low=honest_low,
        collusion=findings,
        collusion_coverage=coverage,
    )
    gains = [report.misreport_high, report.misreport_low] + [c.gain for c in findings]
    report.worst_gain = max(gains)
    ok = (
        report.worst_gain <= eps
        and report.participation_high >= -eps
        and report.participation_low >= -eps
    )
    report.verdict = "pass" if ok else "fail"
    return report


@dataclass(frozen=True)
class RegretPoint:
    p: Fraction
    t: tuple
    gain: Fraction


def regret_curve(
    profile: QualityProfile,
    cost: CostModel,
    n: Sequence[int],
    ps: Sequence,
    t: Sequence | None = None,
    include_ic_high: bool = False,
    low_deviation_cost: str = "own_type",
) -> list[RegretPoint]:
    """High-type misreport gain across ``ps`` for a fixed allocation ``n``.

    With ``t`` given the rewards stay fixed; otherwise they are re-solved at
    every ``p`` from the reward LP (without the high-type incentive row unless
    ``include_ic_high``).  Positive gain means lying pays.
    """
    from .constraints import build_rows
    from .lp import solve
    from .model import as_rational, case_probabilities

    out = []
    for p in ps:
        prof = profile.with_p(as_rational(p))
        if t is None:
            system = build_rows(prof, cost, n, low_deviation_cost)
            if not include_ic_high:
                system = system.without("IC_HIGH")
            outcome = solve(system, case_probabilities(prof).probs)
            if not outcome.optimal:
                raise ValueError(f"reward LP {outcome.status} at p={p} for n={tuple(n)}")
            t_p = outcome.t_star
        else:
            t_p = tuple(t)
        mech = Mechanism(tuple(n), t_p)
        gain = worker_utility(prof, cost, mech, "high", "low") - worker_utility(
            prof, cost, mech, "high", "high"
        )
        out.append(RegretPoint(prof.p, tuple(mech.t), gain))
    return out


def sign_crossing(curve: Sequence[RegretPoint]) -> Fraction | None:
    """First p where the gain turns from positive to non-positive, linearly interpolated."""
    for a, b in zip(curve, curve[1:]):
        if a.gain > 0 >= b.gain:
            return a.p + (b.p - a.p) * a.gain / (a.gain - b.gain)
    return None

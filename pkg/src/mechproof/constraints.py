"""Participation / incentive rows over the reward vector, and collusion checks.

Rows are kept in the form ``coeffs . t >= rhs`` with every term that does not
involve ``t`` folded into ``rhs``.  Coefficients are the raw type weights, so
row left-hand sides are expected utilities (no rescaling).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Sequence

from .model import EPS, CostModel, ModelError, QualityProfile, type_weights

RowLabel = Literal["IR_HIGH", "IR_LOW", "IC_HIGH", "IC_LOW"]
ROW_LABELS: tuple[str, ...] = ("IR_HIGH", "IR_LOW", "IC_HIGH", "IC_LOW")
LOW_DEVIATION_COSTS = ("own_type", "claimed_type")
COLLUSION_METHODS = ("exhaustive", "equal_split_bound")


@dataclass(frozen=True)
class LinearRow:
    coeffs: tuple[Fraction, ...]
    rhs: Fraction
    label: str

    def lhs(self, t: Sequence) -> Fraction:
        return sum((a * v for a, v in zip(self.coeffs, t)), Fraction(0))

    def slack(self, t: Sequence) -> Fraction:
        return self.lhs(t) - self.rhs


@dataclass(frozen=True)
class ConstraintSystem:
    """IR/IC rows built for one candidate allocation ``n``."""

    n: tuple[int, ...]
    rows: tuple[LinearRow, ...]
    collusion_ok: bool | None = None

    def row(self, label: str) -> LinearRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(r.label for r in self.rows)

    def without(self, *labels: str) -> ConstraintSystem:
        """Copy with the given rows dropped (ablation experiments)."""
        return ConstraintSystem(
            self.n, tuple(r for r in self.rows if r.label not in labels), self.collusion_ok
        )


def _check_n(profile: QualityProfile, n: Sequence[int]) -> tuple[int, ...]:
    n = tuple(n)
    if len(n) != profile.m + 1:
        raise ModelError(f"allocation needs m+1={profile.m + 1} entries, got {len(n)}")
    if any(int(v) != v or v < 1 for v in n):
        raise ModelError(f"allocation entries must be positive integers, got {list(n)}")
    return tuple(int(v) for v in n)


def build_rows(
    profile: QualityProfile,
    cost: CostModel,
    n: Sequence[int],
    low_deviation_cost: str = "own_type",
    collusion_ok: bool | None = None,
) -> ConstraintSystem:
    if low_deviation_cost not in LOW_DEVIATION_COSTS:
        raise ModelError(f"unknown low_deviation_cost policy {low_deviation_cost!r}")
    n = _check_n(profile, n)
    m = profile.m
    xh, xl = profile.x_high, profile.x_low
    w_high, w_low = type_weights(profile)
    f = [cost.f(v) for v in n]
    dev_cost_q = xl if low_deviation_cost == "own_type" else xh
    zero = Fraction(0)

    # index k below is 0-based: case k+1
    ir_h, ic_h = [zero] * (m + 1), [zero] * (m + 1)
    const_ir_h = const_ic_h = zero
    for k, w in enumerate(w_high):
        ir_h[k] += w
        ic_h[k] += w
        ic_h[k + 1] -= w
        honest = n[k] * xh - f[k] * xh
        const_ir_h += w * honest
        const_ic_h += w * (honest - (n[k + 1] * xl - f[k + 1] * xh))

    ir_l, ic_l = [zero] * (m + 1), [zero] * (m + 1)
    const_ir_l = const_ic_l = zero
    for k, w in enumerate(w_low, start=1):
        ir_l[k] += w
        ic_l[k] += w
        ic_l[k - 1] -= w
        honest = n[k] * xl - f[k] * xl
        const_ir_l += w * honest
        const_ic_l += w * (honest - (n[k - 1] * xh - f[k - 1] * dev_cost_q))

    rows = (
        LinearRow(tuple(ir_h), -const_ir_h, "IR_HIGH"),
        LinearRow(tuple(ir_l), -const_ir_l, "IR_LOW"),
        LinearRow(tuple(ic_h), -const_ic_h, "IC_HIGH"),
        LinearRow(tuple(ic_l), -const_ic_l, "IC_LOW"),
    )
    return ConstraintSystem(n, rows, collusion_ok)


def residuals(system: ConstraintSystem, t: Sequence) -> dict[str, Fraction]:
    """Signed slack per row; negative means the row is violated."""
    if len(t) != len(system.n):
        raise ModelError(f"reward vector needs {len(system.n)} entries, got {len(t)}")
    return {r.label: r.slack(t) for r in system.rows}


# -- collusion --------------------------------------------------------------


@dataclass(frozen=True)
class CollusionWitness:
    """A profitable split: ``case`` is 1-based, offloads/extras are per worker."""

    case: int
    high_offloads: tuple[int, ...]
    low_extras: tuple[int, ...]
    gain: Fraction | float


@dataclass(frozen=True)
class CollusionCheck:
    ok: bool
    method: str
    witness: CollusionWitness | None = None
    case_gains: dict[int, Fraction | float] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok


def positive_gain(gain: Fraction | float, scale: Fraction | float = 1) -> bool:
    """``gain > 0`` exactly for rationals, ``gain > EPS`` (relative) for floats."""
    if isinstance(gain, Fraction):
        return gain > 0
    return gain > EPS * max(1.0, abs(float(scale)))


def _min_plus_split(values: Sequence, workers: int, cap: int | None):
    """Cheapest way to spread a total over ``workers`` workers.

    ``values[e]`` is one worker's cost when handling share ``e``; shares are
    capped at ``cap`` (or ``len(values)-1``).  Returns ``(best, choice)`` where
    ``best[K]`` is the minimal summed cost for total ``K`` and ``choice`` lets
    :func:`_unwind` recover one minimiser.
    """
    top = len(values) - 1 if cap is None else cap
    best = [Fraction(0)]
    choice: list[list[int]] = []
    for _ in range(workers):
        nxt: list = [None] * (len(best) + top)
        pick = [0] * (len(best) + top)
        for k_prev, c_prev in enumerate(best):
            for e in range(top + 1):
                c = c_prev + values[e]
                K = k_prev + e
                if nxt[K] is None or c < nxt[K]:
                    nxt[K] = c
                    pick[K] = e
        best = nxt
        choice.append(pick)
    return best, choice


def _unwind(choice: list[list[int]], K: int) -> tuple[int, ...]:
    shares = []
    for pick in reversed(choice):
        e = pick[K]
        shares.append(e)
        K -= e
    return tuple(reversed(shares))


def _case_exhaustive(profile: QualityProfile, cost: CostModel, lows: int, n_c: int):
    m = profile.m
    highs = m - lows
    xh, xl = profile.x_high, profile.x_low
    honest = highs * cost.f(n_c) * xh + lows * cost.f(n_c) * xl
    high_vals = [cost.f(n_c - k) * xh for k in range(n_c + 1)]
    low_vals = [cost.f(n_c + e) * xl for e in range(highs * n_c + 1)]
    h_best, h_choice = _min_plus_split(high_vals, highs, None)
    l_best, l_choice = _min_plus_split(low_vals, lows, None)
    best_K, best_cost = 0, h_best[0] + l_best[0]
    for K in range(1, highs * n_c + 1):
        c = h_best[K] + l_best[K]
        if c < best_cost:
            best_K, best_cost = K, c
    gain = honest - best_cost
    return gain, honest, _unwind(h_choice, best_K), _unwind(l_choice, best_K)


def equal_split_bound_gain(profile: QualityProfile, cost: CostModel, lows: int, n_c: int):
    """Colluders' saving when every high worker offloads everything, split
    evenly (possibly fractionally) among the low workers."""
    m = profile.m
    highs = m - lows
    xh, xl = profile.x_high, profile.x_low
    honest = highs * cost.f(n_c) * xh + lows * cost.f(n_c) * xl
    share = Fraction(n_c * m, lows)
    colluding = highs * cost.f(0) * xh + lows * cost.f(share) * xl
    return honest - colluding, honest


def collusion_proof(
    profile: QualityProfile, cost: CostModel, n: Sequence[int], method: str = "exhaustive"
) -> CollusionCheck:
    """Check every mixed case (some high, some low workers) for profitable collusion.

    ``exhaustive`` minimises colluders' total cost over every integer split of
    offloaded tasks (exact for any ``m`` and any cost family).  ``equal_split_bound``
    only compares honesty against the all-tasks-offloaded, evenly divided split.
    """
    n = _check_n(profile, n)
    m = profile.m
    if method not in COLLUSION_METHODS:
        raise ModelError(f"unknown collusion method {method!r}; expected one of {COLLUSION_METHODS}")
    gains: dict[int, Fraction | float] = {}
    witness = None
    for lows in range(1, m):
        case = lows + 1
        n_c = n[case - 1]
        if method == "exhaustive":
            gain, honest, offloads, extras = _case_exhaustive(profile, cost, lows, n_c)
        else:
            gain, honest = equal_split_bound_gain(profile, cost, lows, n_c)
            offloads = (n_c,) * (m - lows)
            extras = ()
        gains[case] = gain
        if witness is None and positive_gain(gain, honest):
            witness = CollusionWitness(case, offloads, extras, gain)
    return CollusionCheck(witness is None, method, witness, gains)


class CollusionTable:
    """Memoised per-(case, n_j) collusion verdicts for grid searches.

    Collusion in case ``j`` depends only on ``n_j``, so a candidate allocation
    is collusion-proof iff each of its mixed-case entries is.
    """

    def __init__(self, profile: QualityProfile, cost: CostModel, method: str = "exhaustive"):
        if method not in COLLUSION_METHODS:
            raise ModelError(f"unknown collusion method {method!r}")
        self.profile, self.cost, self.method = profile, cost, method
        self._cache: dict[tuple[int, int], bool] = {}

    def case_ok(self, case: int, n_c: int) -> bool:
        key = (case, n_c)
        if key not in self._cache:
            lows = case - 1
            if self.method == "exhaustive":
                gain, honest, _, _ = _case_exhaustive(self.profile, self.cost, lows, n_c)
            else:
                gain, honest = equal_split_bound_gain(self.profile, self.cost, lows, n_c)
            self._cache[key] = not positive_gain(gain, honest)
        return self._cache[key]

    def __call__(self, n: Sequence[int]) -> bool:
        m = self.profile.m
        return all(self.case_ok(case, n[case - 1]) for case in range(2, m + 1))

"""Worker-type model, cost/revenue families and expected-utility arithmetic.

Everything here is exact when the inputs are rational: floats coming from
configs are converted through their decimal repr, so ``0.1`` becomes
``Fraction(1, 10)`` rather than the nearest binary double.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Sequence, Union

Number = Union[int, float, Fraction]
Quality = Literal["high", "low"]

#: comparison tolerance used whenever a float sneaks into a computation
EPS = 1e-9


class ModelError(ValueError):
    """Raised for invalid model parameters."""


def as_rational(x: Number | str) -> Fraction:
    """Convert ``x`` to a Fraction, reading floats by their shortest repr."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise ModelError(f"expected a number, got {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ModelError(f"non-finite value {x!r}")
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x)
    raise ModelError(f"expected a number, got {x!r}")


def _is_integral(x: Number) -> bool:
    if isinstance(x, int):
        return True
    if isinstance(x, Fraction):
        return x.denominator == 1
    return float(x).is_integer()


@dataclass(frozen=True)
class QualityProfile:
    """Two-type worker population: ``m`` workers, each high quality w.p. ``p``."""

    m: int
    p: Fraction
    x_high: Fraction
    x_low: Fraction

    def __post_init__(self):
        if isinstance(self.m, bool) or not isinstance(self.m, int) or self.m < 2:
            raise ModelError(f"worker count m must be an integer >= 2, got {self.m!r}")
        object.__setattr__(self, "p", as_rational(self.p))
        object.__setattr__(self, "x_high", as_rational(self.x_high))
        object.__setattr__(self, "x_low", as_rational(self.x_low))
        if not 0 < self.p < 1:
            raise ModelError(
                f"p must lie in the open interval (0, 1), got {self.p}; "
                "p in {0, 1} leaves only one worker type"
            )
        if self.x_low <= 0:
            raise ModelError(f"x_low must be > 0, got {self.x_low}")
        if self.x_high <= self.x_low:
            raise ModelError(
                f"x_high must exceed x_low, got x_high={self.x_high}, x_low={self.x_low}"
            )

    @property
    def n_cases(self) -> int:
        return self.m + 1

    def quality(self, q: Quality) -> Fraction:
        if q == "high":
            return self.x_high
        if q == "low":
            return self.x_low
        raise ModelError(f"quality must be 'high' or 'low', got {q!r}")

    def with_p(self, p: Number) -> QualityProfile:
        return QualityProfile(self.m, as_rational(p), self.x_high, self.x_low)


@dataclass(frozen=True)
class CaseDistribution:
    m: int
    probs: tuple[Fraction, ...]

    def __getitem__(self, j: int) -> Fraction:
        """1-based case access, ``dist[1]`` is the all-high case."""
        if not 1 <= j <= self.m + 1:
            raise IndexError(f"case index {j} outside 1..{self.m + 1}")
        return self.probs[j - 1]


def case_probabilities(profile: QualityProfile) -> CaseDistribution:
    """Binomial probability of each case; case ``j`` has ``m+1-j`` high workers."""
    m, p = profile.m, profile.p
    probs = tuple(
        math.comb(m, m + 1 - j) * p ** (m + 1 - j) * (1 - p) ** (j - 1)
        for j in range(1, m + 2)
    )
    return CaseDistribution(m, probs)


def type_weights(profile: QualityProfile) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    """Joint weights P(own type, case) for a single worker.

    Returns ``(w_high, w_low)``; ``w_high[i-1]`` is the weight of case ``i``
    for ``i = 1..m`` and ``w_low[i-2]`` that of case ``i`` for ``i = 2..m+1``.
    """
    m = profile.m
    probs = case_probabilities(profile).probs
    w_high = tuple(
        Fraction(math.comb(m - 1, m - i), math.comb(m, m + 1 - i)) * probs[i - 1]
        for i in range(1, m + 1)
    )
    w_low = tuple(
        Fraction(math.comb(m - 1, m + 1 - i), math.comb(m, m + 1 - i)) * probs[i - 1]
        for i in range(2, m + 2)
    )
    return w_high, w_low


# -- cost -------------------------------------------------------------------

COST_FAMILIES = ("exp2minus1", "power", "table")


@dataclass(frozen=True)
class CostModel:
    """Per-task cost ``F(n, x) = f(n) * x``.

    ``f`` is one of ``exp2minus1`` (2**n - 1), ``power`` (n**exponent) or
    ``table`` (values at 0, 1, 2, ... joined piecewise linearly and extended
    past the last point with the final slope).
    """

    family: str = "exp2minus1"
    exponent: Fraction = Fraction(2)
    values: tuple[Fraction, ...] = ()

    def __post_init__(self):
        if self.family not in COST_FAMILIES:
            raise ModelError(f"unknown cost family {self.family!r}; expected one of {COST_FAMILIES}")
        object.__setattr__(self, "exponent", as_rational(self.exponent))
        object.__setattr__(self, "values", tuple(as_rational(v) for v in self.values))
        if self.family == "power" and self.exponent < 1:
            raise ModelError(f"power cost needs exponent >= 1, got {self.exponent}")
        if self.family == "table":
            v = self.values
            if len(v) < 2:
                raise ModelError("table cost needs at least two values (f(0), f(1))")
            if v[0] < 0:
                raise ModelError("table cost needs f(0) >= 0")
            diffs = [b - a for a, b in zip(v, v[1:])]
            if any(d < 0 for d in diffs):
                raise ModelError("table cost must be non-decreasing")
            if any(b < a for a, b in zip(diffs, diffs[1:])):
                raise ModelError("table cost must be convex (non-decreasing increments)")

    @classmethod
    def exp2minus1(cls) -> CostModel:
        return cls("exp2minus1")

    @classmethod
    def power(cls, exponent: Number = 2) -> CostModel:
        return cls("power", exponent=as_rational(exponent))

    @classmethod
    def table(cls, values: Sequence[Number]) -> CostModel:
        return cls("table", values=tuple(as_rational(v) for v in values))

    def f(self, n: Number) -> Fraction | float:
        """Evaluate ``f`` at a non-negative real; exact wherever that is possible."""
        if n < 0:
            raise ModelError(f"cost function domain is n >= 0, got {n}")
        if self.family == "exp2minus1":
            if _is_integral(n):
                return Fraction(2 ** int(n) - 1)
            return 2.0 ** float(n) - 1.0
        if self.family == "power":
            e = self.exponent
            if e.denominator == 1:
                return as_rational(n) ** int(e) if not isinstance(n, float) else n ** int(e)
            return float(n) ** float(e)
        v = self.values
        x = as_rational(n) if not isinstance(n, float) else n
        k = min(int(math.floor(x)), len(v) - 2)
        lo, hi = v[k], v[k + 1]
        frac = x - k
        return lo + (hi - lo) * frac

    def cost(self, n: Number, x: Number) -> Fraction | float:
        return self.f(n) * x

    def to_dict(self) -> dict:
        d: dict = {"family": self.family}
        if self.family == "power":
            d["exponent"] = _num_out(self.exponent)
        if self.family == "table":
            d["values"] = [_num_out(v) for v in self.values]
        return d


# -- revenue ----------------------------------------------------------------

REVENUE_FAMILIES = ("quadratic_quality_weighted", "custom")


@dataclass(frozen=True)
class RevenueModel:
    """Requestor revenue ``R_j`` for case ``j`` at per-worker task count ``n_j``.

    ``quadratic_quality_weighted``: ``R_j = ((m+1-j) x_high + (j-1) x_low) n_j**2``.
    ``custom``: ``coeffs[j-1]`` lists polynomial coefficients ``a_0, a_1, ...``
    so that ``R_j = sum_k a_k n_j**k``; coefficients must be non-negative.
    """

    family: str = "quadratic_quality_weighted"
    coeffs: tuple[tuple[Fraction, ...], ...] = ()

    def __post_init__(self):
        if self.family not in REVENUE_FAMILIES:
            raise ModelError(
                f"unknown revenue family {self.family!r}; expected one of {REVENUE_FAMILIES}"
            )
        rows = tuple(tuple(as_rational(a) for a in row) for row in self.coeffs)
        object.__setattr__(self, "coeffs", rows)
        if self.family == "custom":
            if not rows:
                raise ModelError("custom revenue needs one coefficient row per case")
            if any(a < 0 for row in rows for a in row):
                raise ModelError("custom revenue coefficients must be non-negative")

    @classmethod
    def quadratic(cls) -> RevenueModel:
        return cls("quadratic_quality_weighted")

    @classmethod
    def custom(cls, coeffs: Sequence[Sequence[Number]]) -> RevenueModel:
        return cls("custom", tuple(tuple(as_rational(a) for a in row) for row in coeffs))

    def check_cases(self, m: int) -> None:
        if self.family == "custom" and len(self.coeffs) != m + 1:
            raise ModelError(
                f"custom revenue has {len(self.coeffs)} case rows, model has m+1={m + 1} cases"
            )

    def revenue(self, profile: QualityProfile, j: int, n: int) -> Fraction:
        m = profile.m
        if self.family == "quadratic_quality_weighted":
            weight = (m + 1 - j) * profile.x_high + (j - 1) * profile.x_low
            return weight * n * n
        self.check_cases(m)
        return sum((a * n**k for k, a in enumerate(self.coeffs[j - 1])), Fraction(0))

    def to_dict(self) -> dict:
        d: dict = {"family": self.family}
        if self.family == "custom":
            d["coeffs"] = [[_num_out(a) for a in row] for row in self.coeffs]
        return d


# -- mechanism --------------------------------------------------------------


@dataclass(frozen=True)
class Mechanism:
    """Per-case task counts ``n`` and extra rewards ``t`` (both length m+1)."""

    n: tuple[int, ...]
    t: tuple[Fraction, ...]
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        n = tuple(self.n)
        if any(isinstance(v, bool) or not _is_integral(v) for v in n):
            raise ModelError(f"task counts must be integers, got {list(n)}")
        n = tuple(int(v) for v in n)
        t = tuple(as_rational(v) for v in self.t)
        if len(n) != len(t):
            raise ModelError(f"len(n)={len(n)} differs from len(t)={len(t)}")
        if any(v < 1 for v in n):
            raise ModelError(f"task counts must be positive integers, got {list(n)}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "t", t)

    @property
    def m(self) -> int:
        return len(self.n) - 1

    def check_profile(self, profile: QualityProfile) -> None:
        if self.m != profile.m:
            raise ModelError(
                f"mechanism has {len(self.n)} cases but the profile needs m+1={profile.m + 1}"
            )


def payment(profile: QualityProfile, mech: Mechanism, case_j: int, quality: Quality) -> Fraction:
    """Payment to one worker in case ``case_j`` who is paid at ``quality``."""
    if not 1 <= case_j <= len(mech.n):
        raise IndexError(f"case index {case_j} outside 1..{len(mech.n)}")
    return mech.n[case_j - 1] * profile.quality(quality) + mech.t[case_j - 1]


def case_payment_total(profile: QualityProfile, mech: Mechanism, j: int) -> Fraction:
    m = profile.m
    n_j = mech.n[j - 1]
    return n_j * ((m + 1 - j) * profile.x_high + (j - 1) * profile.x_low) + m * mech.t[j - 1]


def requestor_expected_utility(
    profile: QualityProfile, revenue: RevenueModel, mech: Mechanism
) -> Fraction:
    """Expected revenue minus expected payments under honest reporting."""
    mech.check_profile(profile)
    probs = case_probabilities(profile).probs
    return sum(
        (
            pj * (revenue.revenue(profile, j, mech.n[j - 1]) - case_payment_total(profile, mech, j))
            for j, pj in enumerate(probs, start=1)
        ),
        Fraction(0),
    )


def worker_expected_utility(
    profile: QualityProfile,
    cost: CostModel,
    mech: Mechanism,
    own_type: Quality,
    report: Quality,
    low_deviation_cost: str = "own_type",
) -> Fraction:
    """Expected utility of a worker of ``own_type`` who claims ``report``.

    A high worker claiming low lands one case later and is paid at ``x_low``
    while still paying the high-quality cost.  A low worker claiming high lands
    one case earlier and is paid at ``x_high``; its cost is charged at its own
    quality unless ``low_deviation_cost == "claimed_type"``.
    """
    mech.check_profile(profile)
    w_high, w_low = type_weights(profile)
    n, t = mech.n, mech.t
    xh, xl = profile.x_high, profile.x_low
    total = Fraction(0)
    if own_type == "high":
        for i, w in enumerate(w_high, start=1):
            j = i if report == "high" else i + 1
            pay_q = xh if report == "high" else xl
            total += w * (n[j - 1] * pay_q + t[j - 1] - cost.cost(n[j - 1], xh))
        return total
    if own_type != "low":
        raise ModelError(f"own_type must be 'high' or 'low', got {own_type!r}")
    if report == "low":
        cost_q = xl
    elif low_deviation_cost == "own_type":
        cost_q = xl
    elif low_deviation_cost == "claimed_type":
        cost_q = xh
    else:
        raise ModelError(f"unknown low_deviation_cost policy {low_deviation_cost!r}")
    for i, w in enumerate(w_low, start=2):
        j = i if report == "low" else i - 1
        pay_q = xl if report == "low" else xh
        total += w * (n[j - 1] * pay_q + t[j - 1] - cost.cost(n[j - 1], cost_q))
    return total


def _num_out(x: Fraction | float | int) -> int | float:
    """JSON-friendly rendering of a number."""
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return int(x)
        return float(x)
    return x

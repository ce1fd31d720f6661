"""Exact small-LP solver for the reward vector at a fixed allocation.

At fixed ``n`` every term of the requestor's utility except ``-m * sum_j p_j t_j``
is constant, so the reward design problem is

    minimise  sum_j p_j t_j   subject to   row.coeffs . t >= row.rhs  (each row)

with ``t`` free.  The problem is tiny (at most 4 rows), so a dense two-phase
tableau simplex with Bland's rule over ``fractions.Fraction`` is used; the
same code runs on floats when ``exact=False``.

The optimum is usually not unique.  Ties are broken by minimising
``sum_j |t_j|`` and then taking the lexicographically smallest ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .constraints import ConstraintSystem

FLOAT_TOL = 1e-12


@dataclass(frozen=True)
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: tuple | None = None
    objective: Fraction | float | None = None


class _Tableau:
    def __init__(self, rows, rhs, basis, exact):
        self.rows = rows  # list of coefficient lists
        self.rhs = rhs
        self.basis = basis
        self.zero = Fraction(0) if exact else 0.0
        self.tol = 0 if exact else FLOAT_TOL

    def pivot(self, r: int, c: int) -> None:
        row = self.rows[r]
        piv = row[c]
        self.rows[r] = row = [v / piv for v in row]
        self.rhs[r] = self.rhs[r] / piv
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            factor = other[c]
            if factor != 0:
                self.rows[i] = [a - factor * b for a, b in zip(other, row)]
                self.rhs[i] = self.rhs[i] - factor * self.rhs[r]
        self.basis[r] = c

    def reduced_costs(self, cost):
        red = list(cost)
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb != 0:
                red = [rj - cb * a for rj, a in zip(red, self.rows[i])]
        return red

    def run(self, cost, allowed: int) -> str:
        """Bland's-rule primal simplex over columns ``< allowed``."""
        while True:
            red = self.reduced_costs(cost)
            enter = next((j for j in range(allowed) if red[j] < -self.tol), None)
            if enter is None:
                return "optimal"
            best = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > self.tol:
                    ratio = self.rhs[i] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return "unbounded"
            self.pivot(best[1], enter)


def simplex(
    c: Sequence,
    A_ub: Sequence[Sequence] = (),
    b_ub: Sequence = (),
    A_eq: Sequence[Sequence] = (),
    b_eq: Sequence = (),
    exact: bool = True,
) -> LpResult:
    """Minimise ``c.x`` s.t. ``A_ub x <= b_ub``, ``A_eq x == b_eq``, ``x >= 0``."""
    conv = Fraction if exact else float
    nx = len(c)
    n_ub, n_eq = len(A_ub), len(A_eq)
    n_slack = n_ub
    rows, rhs, needs_art = [], [], []
    for i, (a, b) in enumerate(zip(A_ub, b_ub)):
        row = [conv(v) for v in a] + [conv(0)] * n_slack
        row[nx + i] = conv(1)
        b = conv(b)
        if b < 0:
            row = [-v for v in row]
            b = -b
            needs_art.append(True)
        else:
            needs_art.append(False)
        rows.append(row)
        rhs.append(b)
    for a, b in zip(A_eq, b_eq):
        row = [conv(v) for v in a] + [conv(0)] * n_slack
        b = conv(b)
        if b < 0:
            row = [-v for v in row]
            b = -b
        rows.append(row)
        rhs.append(b)
        needs_art.append(True)

    n_art = sum(needs_art)
    n_struct = nx + n_slack
    basis = []
    k = 0
    for i, row in enumerate(rows):
        row.extend([conv(0)] * n_art)
        if needs_art[i]:
            row[n_struct + k] = conv(1)
            basis.append(n_struct + k)
            k += 1
        else:
            basis.append(nx + i)
    tab = _Tableau(rows, rhs, basis, exact)
    total = n_struct + n_art

    if n_art:
        phase1 = [conv(0)] * n_struct + [conv(1)] * n_art
        tab.run(phase1, total)
        infeas = sum((tab.rhs[i] for i, b in enumerate(tab.basis) if b >= n_struct), conv(0))
        if infeas > tab.tol * max(1, len(rows)):
            return LpResult("infeasible")
        # drive zero-level artificials out of the basis, dropping redundant rows
        i = 0
        while i < len(tab.rows):
            if tab.basis[i] >= n_struct:
                col = next(
                    (j for j in range(n_struct) if abs(tab.rows[i][j]) > tab.tol), None
                )
                if col is None:
                    del tab.rows[i], tab.rhs[i], tab.basis[i]
                    continue
                tab.pivot(i, col)
            i += 1
        tab.rows = [row[:n_struct] for row in tab.rows]

    cost = [conv(v) for v in c] + [conv(0)] * n_slack
    status = tab.run(cost, n_struct)
    if status == "unbounded":
        return LpResult("unbounded")
    x = [conv(0)] * n_struct
    for i, b in enumerate(tab.basis):
        x[b] = tab.rhs[i]
    x = x[:nx]
    obj = sum((ci * xi for ci, xi in zip(cost, x)), conv(0))
    return LpResult("optimal", tuple(x), obj)


# -- reward LP --------------------------------------------------------------


@dataclass(frozen=True)
class LpOutcome:
    status: str
    t_star: tuple | None = None
    objective: Fraction | float | None = None
    box_active: tuple[int, ...] = ()

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _reward_lp_data(system: ConstraintSystem, t_bound):
    """Split ``t = tp - tm`` and express rows as ``<=`` constraints."""
    k = len(system.n)
    A_ub, b_ub = [], []
    for row in system.rows:
        a = list(row.coeffs)
        A_ub.append([-v for v in a] + list(a))
        b_ub.append(-row.rhs)
    if t_bound is not None:
        for j in range(2 * k):
            e = [0] * (2 * k)
            e[j] = 1
            A_ub.append(e)
            b_ub.append(t_bound)
    return A_ub, b_ub


def _signed(x, k):
    return tuple(x[j] - x[k + j] for j in range(k))


def min_expected_reward(
    system: ConstraintSystem, probs: Sequence, exact: bool = True, t_bound=None
) -> LpResult:
    """Stage one only: the optimal value of ``sum_j p_j t_j`` (no tie-break)."""
    k = len(system.n)
    A_ub, b_ub = _reward_lp_data(system, t_bound)
    p = list(probs)
    res = simplex(p + [-v for v in p], A_ub, b_ub, exact=exact)
    if res.status != "optimal":
        return res
    return LpResult("optimal", _signed(res.x, k), res.objective)


def solve(
    system: ConstraintSystem,
    probs: Sequence,
    exact: bool = True,
    t_bound=None,
) -> LpOutcome:
    """Optimal rewards for a fixed allocation with the deterministic tie-break."""
    conv = Fraction if exact else float
    k = len(system.n)
    probs = [conv(v) for v in probs]
    if t_bound is not None:
        t_bound = conv(t_bound)
    A_ub, b_ub = _reward_lp_data(system, t_bound)
    obj = probs + [-v for v in probs]
    first = simplex(obj, A_ub, b_ub, exact=exact)
    if first.status != "optimal":
        return LpOutcome(first.status)
    z_star = first.objective

    def pin(A_ub, b_ub, A_eq, b_eq, coeffs, value):
        # exact mode pins with an equality; float mode allows a hair of slack
        if exact:
            return A_ub, b_ub, A_eq + [coeffs], b_eq + [value]
        return A_ub + [coeffs], b_ub + [value + FLOAT_TOL * max(1.0, abs(value))], A_eq, b_eq

    A_eq: list = []
    b_eq: list = []
    A_ub, b_ub, A_eq, b_eq = pin(A_ub, b_ub, A_eq, b_eq, obj, z_star)
    l1 = [conv(1)] * (2 * k)
    second = simplex(l1, A_ub, b_ub, A_eq, b_eq, exact=exact)
    if second.status != "optimal":  # pragma: no cover - stage one guarantees feasibility
        raise RuntimeError(f"tie-break stage failed with status {second.status}")
    A_ub, b_ub, A_eq, b_eq = pin(A_ub, b_ub, A_eq, b_eq, l1, second.objective)
    x = second.x
    for j in range(k):
        e = [conv(0)] * (2 * k)
        e[j], e[k + j] = conv(1), conv(-1)
        step = simplex(e, A_ub, b_ub, A_eq, b_eq, exact=exact)
        if step.status != "optimal":  # pragma: no cover
            raise RuntimeError(f"lexicographic stage failed with status {step.status}")
        x = step.x
        if exact:
            A_eq, b_eq = A_eq + [e], b_eq + [step.objective]
        else:
            A_ub, b_ub = A_ub + [e], b_ub + [step.objective + FLOAT_TOL]
            A_ub, b_ub = A_ub + [[-v for v in e]], b_ub + [-step.objective + FLOAT_TOL]
    t_star = _signed(x, k)
    objective = sum((pj * tj for pj, tj in zip(probs, t_star)), conv(0))
    box = ()
    if t_bound is not None:
        box = tuple(
            j for j, tj in enumerate(t_star, start=1) if abs(abs(tj) - t_bound) <= FLOAT_TOL
        )
    return LpOutcome("optimal", t_star, objective, box)


def dual_certificate(system: ConstraintSystem, probs: Sequence, exact: bool = True) -> LpResult:
    """Solve the dual ``max rhs.y  s.t.  A^T y = p, y >= 0``.

    The returned ``x`` holds one multiplier per row (in ``system.rows`` order)
    and ``objective`` the dual value ``rhs . y``.
    """
    k = len(system.n)
    rows = system.rows
    A_eq = [[r.coeffs[j] for r in rows] for j in range(k)]
    res = simplex([-r.rhs for r in rows], A_eq=A_eq, b_eq=list(probs), exact=exact)
    if res.status != "optimal":
        return res
    return LpResult("optimal", res.x, -res.objective)

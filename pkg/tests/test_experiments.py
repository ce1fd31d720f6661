from fractions import Fraction as F

import pytest

from mechproof.config import parse_config
from mechproof.constraints import build_rows
from mechproof.experiments import (
    FOOTNOTE_N,
    PRESET_COST,
    Check,
    GridPoint,
    GridTooLarge,
    SuiteResult,
    fmt,
    footnote_curve,
    grid_points,
    non_decreasing,
    non_increasing,
    ntable_regimes,
    pool_size,
    run_grid,
    run_suite,
)
from mechproof.model import CostModel, QualityProfile, RevenueModel
from mechproof.optimizer import SearchConfig


def test_fmt():
    assert fmt(F(3)) == "3"
    assert fmt(F(1, 10)) == "0.1"
    assert fmt(True) == "true" and fmt(None) == ""
    assert fmt(F(1, 3)) == repr(1 / 3)


def test_grid_points_sorted_and_limited():
    cfg = parse_config({"p": 0.5, "x_high": 2, "x_low": 1, "sweep": {"p": [0.3, 0.1], "m": [3, 2]}})
    pts = grid_points(cfg)
    assert pts[0] == GridPoint(2, F(1, 10), F(2), F(1))
    assert [(pt.m, pt.p) for pt in pts] == [(2, F(1, 10)), (2, F(3, 10)), (3, F(1, 10)), (3, F(3, 10))]
    sweep = {"p": [k / 1000 for k in range(1, 999)], "x_high": list(range(2, 200))}
    big = parse_config({"p": 0.5, "x_high": 2, "x_low": 1, "sweep": sweep})
    with pytest.raises(GridTooLarge):
        grid_points(big)


def test_invalid_grid_point_reported_not_raised():
    (res,) = run_grid([GridPoint(2, F(1, 2), F(1), F(2))], CostModel(), RevenueModel(), SearchConfig(n_max=2))
    assert not res.feasible and "x_high must exceed" in res.error


def test_trend_helpers_tolerance():
    assert non_decreasing([1, 2, 2, 3])
    assert non_decreasing([1, 1 - F(1, 10**10), 2])
    assert not non_decreasing([1, F(9, 10)])
    assert non_increasing([3, 2, 2])


def test_check_lines():
    assert Check("x", True).line("s") == "PASS s: x"
    assert Check("x", False, "why").line("s") == "FAIL s: x (why)"
    assert Check("x", False, gating=False).line("s") == "INFO s: x"
    res = SuiteResult("s", "", [Check("a", True), Check("b", False, gating=False)])
    assert res.passed and res.summary().endswith("PASS s: suite\n")


def test_pool_size_env(monkeypatch):
    monkeypatch.setenv("MECHPROOF_THREADS", "3")
    assert pool_size() == 3
    monkeypatch.setenv("MECHPROOF_THREADS", "many")
    with pytest.raises(ValueError):
        pool_size()


def test_footnote_curve_rewards_meet_rows_without_high_ic():
    for pt in footnote_curve():
        rows = build_rows(QualityProfile(2, pt.p, 9, 1), PRESET_COST, FOOTNOTE_N).without("IC_HIGH")
        assert all(r.slack(pt.t) >= 0 for r in rows.rows)


def test_ntable_covers_six_regimes():
    labels = {label for label, _ in ntable_regimes()}
    assert labels == {"delta_x=4", "delta_x=18", "p=0.2", "p=0.9", "x_high=4", "x_high=18"}


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suite("fig9")

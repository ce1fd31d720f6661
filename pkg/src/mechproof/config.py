"""JSON run configuration: parsing, validation and round-tripping."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import jsonschema

from .model import CostModel, ModelError, QualityProfile, RevenueModel, as_rational
from .optimizer import SearchConfig

# numbers may also be written as exact rationals, e.g. "1/10"
_NUM = {"oneOf": [{"type": "number"}, {"type": "string", "pattern": r"^-?\d+(\.\d+)?(/\d+)?$"}]}
_NUM_LIST = {"type": "array", "items": _NUM, "minItems": 1}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["p", "x_high", "x_low"],
    "properties": {
        "m": {"type": "integer"},
        "p": _NUM,
        "x_high": _NUM,
        "x_low": _NUM,
        "cost": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family"],
            "properties": {
                "family": {"enum": ["exp2minus1", "power", "table"]},
                "exponent": _NUM,
                "values": _NUM_LIST,
            },
        },
        "revenue": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family"],
            "properties": {
                "family": {"enum": ["quadratic_quality_weighted", "custom"]},
                "coeffs": {"type": "array", "items": _NUM_LIST},
            },
        },
        "search": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_max": {"type": "integer", "minimum": 1},
                "include_ic_high": {"type": "boolean"},
                "low_deviation_cost": {"enum": ["own_type", "claimed_type"]},
                "t_bound": {"oneOf": [_NUM, {"type": "null"}]},
                "collusion_check": {"enum": ["exhaustive", "equal_split_bound"]},
                "auto_escalate": {"type": "boolean"},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "m": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                "p": _NUM_LIST,
                "x_high": _NUM_LIST,
                "x_low": _NUM_LIST,
            },
        },
    },
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    m: int
    p: Fraction
    x_high: Fraction
    x_low: Fraction
    cost: CostModel = field(default_factory=CostModel)
    revenue: RevenueModel = field(default_factory=RevenueModel)
    search: SearchConfig = field(default_factory=SearchConfig)
    auto_escalate: bool = False
    sweep: dict[str, tuple] = field(default_factory=dict)

    def profile(self) -> QualityProfile:
        return QualityProfile(self.m, self.p, self.x_high, self.x_low)

    def to_dict(self) -> dict:
        s = self.search
        search = {
            "n_max": s.n_max,
            "include_ic_high": s.include_ic_high,
            "low_deviation_cost": s.low_deviation_cost,
            "t_bound": None if s.t_bound is None else _rational_out(s.t_bound),
            "collusion_check": s.collusion_check,
            "auto_escalate": self.auto_escalate,
        }
        d = {
            "m": self.m,
            "p": _rational_out(self.p),
            "x_high": _rational_out(self.x_high),
            "x_low": _rational_out(self.x_low),
            "cost": self.cost.to_dict(),
            "revenue": self.revenue.to_dict(),
            "search": search,
        }
        if self.sweep:
            d["sweep"] = {
                k: [v if k == "m" else _rational_out(v) for v in vals] for k, vals in self.sweep.items()
            }
        return d


def _rational_out(x: Fraction):
    """Integers as ints, short decimals as floats, anything else as "a/b" (lossless)."""
    x = as_rational(x)
    if x.denominator == 1:
        return int(x)
    if Fraction(repr(float(x))) == x:
        return float(x)
    return f"{x.numerator}/{x.denominator}"


def _field_path(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def parse_config(data: Any) -> RunConfig:
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        msg = "; ".join(f"{_field_path(e)}: {e.message}" for e in errors)
        raise ConfigError(f"config schema violation: {msg}")
    try:
        cost_d = data.get("cost", {"family": "exp2minus1"})
        cost = CostModel(
            cost_d["family"],
            exponent=as_rational(cost_d.get("exponent", 2)),
            values=tuple(as_rational(v) for v in cost_d.get("values", ())),
        )
        rev_d = data.get("revenue", {"family": "quadratic_quality_weighted"})
        revenue = RevenueModel(
            rev_d["family"], tuple(tuple(as_rational(a) for a in row) for row in rev_d.get("coeffs", ()))
        )
        s = data.get("search", {})
        t_bound = s.get("t_bound")
        search = SearchConfig(
            n_max=s.get("n_max", 12),
            include_ic_high=s.get("include_ic_high", True),
            low_deviation_cost=s.get("low_deviation_cost", "own_type"),
            t_bound=None if t_bound is None else as_rational(t_bound),
            collusion_check=s.get("collusion_check", "exhaustive"),
        )
        sweep = {
            k: tuple(v if k == "m" else as_rational(v) for v in vals)
            for k, vals in data.get("sweep", {}).items()
        }
        cfg = RunConfig(
            m=data.get("m", 2),
            p=as_rational(data["p"]),
            x_high=as_rational(data["x_high"]),
            x_low=as_rational(data["x_low"]),
            cost=cost,
            revenue=revenue,
            search=search,
            auto_escalate=s.get("auto_escalate", False),
            sweep=sweep,
        )
        cfg.profile()
        revenue.check_cases(cfg.m)
    except (ModelError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    return cfg


def load_config(path: str | Path) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(data)

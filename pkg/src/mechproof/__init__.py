"""Requestor-optimal, misreport- and collusion-proof crowdsourcing mechanisms."""

from .adversary import DeviationReport, regret_curve, verify
from .constraints import build_rows, collusion_proof, residuals
from .lp import solve
from .model import (
    CostModel,
    Mechanism,
    QualityProfile,
    RevenueModel,
    case_probabilities,
    payment,
    requestor_expected_utility,
    type_weights,
    worker_expected_utility,
)
from .optimizer import SearchConfig, SolveReport, boundary_report, optimize, optimize_escalating

__all__ = [
    "CostModel",
    "DeviationReport",
    "Mechanism",
    "QualityProfile",
    "RevenueModel",
    "SearchConfig",
    "SolveReport",
    "boundary_report",
    "build_rows",
    "case_probabilities",
    "collusion_proof",
    "optimize",
    "optimize_escalating",
    "payment",
    "regret_curve",
    "requestor_expected_utility",
    "residuals",
    "solve",
    "type_weights",
    "verify",
    "worker_expected_utility",
]

"""Surprise factor: how far a plan's expected cost was from what it really cost.

Expected cost prices the path with the predicted per-pixel class costs;
actual cost prices the same path with ground-truth class costs. The factor
is |expected - actual| / actual, so under- and overestimates are treated
symmetrically. The risk weight is a planning-time penalty and is excluded
from the expected cost (pricing with it would inflate expectations
mechanically as the weight grows).
"""
from __future__ import annotations

from dataclasses import dataclass

from .confidence import deterministic_baseline, estimate_confidence
from .planner import PixelCoord, PlannedPath, path_cost_under, plan
from .riskmap import RiskCostMap, RiskConfig, build_risk_cost_map, ground_truth_cost_map
from .taxonomy import CostTable
from .tensorio import LabelMap, ScalarMap, SoftmaxStack

VARIANTS = ("ground_truth", "deterministic", "dropout", "bootstrap")


class UndefinedMetricError(ValueError):
    """Actual cost is zero while expected differs; the ratio is undefined."""


@dataclass(eq=False)
class SurpriseReport:
    expected_cost: float
    actual_cost: float
    surprise_factor: float
    path: PlannedPath
    provenance: str


def surprise_factor(expected: float, actual: float, *, signed: bool = False,
                    denominator: str = "actual") -> float:
    """Normalized expectation gap.

    The default is the symmetric form |expected - actual| / actual. The
    signed difference and the expected-cost denominator (which penalize
    underestimates differently) are available but excluded from all default
    metrics.
    """
    if denominator not in ("actual", "expected"):
        raise ValueError(f"unknown denominator {denominator!r}")
    diff = expected - actual if signed else abs(expected - actual)
    denom = actual if denominator == "actual" else expected
    if denom == 0.0:
        if expected == actual:
            return 0.0
        raise UndefinedMetricError(
            f"surprise undefined: expected {expected}, actual {actual}, zero denominator"
        )
    return diff / denom


def evaluate_surprise(path: PlannedPath, predicted_base: ScalarMap,
                      truth_map: RiskCostMap, provenance: str = "",
                      *, signed: bool = False,
                      denominator: str = "actual") -> SurpriseReport:
    """Price one path under predicted and ground-truth costs and compare."""
    if len(path.waypoints) <= 1:
        return SurpriseReport(0.0, 0.0, 0.0, path, provenance)
    expected = path_cost_under(predicted_base, path)
    actual = path_cost_under(truth_map, path)
    factor = surprise_factor(expected, actual, signed=signed, denominator=denominator)
    return SurpriseReport(expected, actual, factor, path, provenance)


def run_scenario(stack: SoftmaxStack, truth: LabelMap, table: CostTable,
                 config: RiskConfig, variant: str,
                 start: PixelCoord, goal: PixelCoord) -> SurpriseReport:
    """Plan under one pipeline variant and evaluate its surprise.

    ground_truth plans on true class costs (always zero surprise);
    deterministic plans on pass-0 costs with no risk term; dropout and
    bootstrap plan on the aggregated stack costs plus the weighted
    uncertainty term.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    truth_map = ground_truth_cost_map(truth, table)

    if variant == "ground_truth":
        planning_map = truth_map
        predicted_base = truth_map.costs
        provenance = "ground-truth"
    elif variant == "deterministic":
        maps = deterministic_baseline(stack, table)
        planning_map = build_risk_cost_map(maps, RiskConfig(0.0), table=table,
                                           provenance="deterministic")
        predicted_base = maps.base_cost
        provenance = "deterministic"
    else:
        maps = estimate_confidence(stack, table)
        provenance = f"{variant}(samples={stack.passes}, lam={config.lam})"
        planning_map = build_risk_cost_map(maps, config, table=table,
                                           provenance=provenance)
        predicted_base = maps.base_cost

    path = plan(planning_map, start, goal)
    return evaluate_surprise(path, predicted_base, truth_map, provenance)

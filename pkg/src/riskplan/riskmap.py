"""Per-pixel planning cost: base class cost plus a weighted uncertainty term.

cost(p) = base_cost(p) + lam * uncertainty(p), with lam >= 0. lam = 0 is the
risk-neutral case. Standard deviation (not variance) is the uncertainty
measure upstream, which keeps the term on the same scale as the class costs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .confidence import ConfidenceMaps
from .taxonomy import CostTable
from .tensorio import LabelMap, ScalarMap, write_scalar_map, read_scalar_map

# Experiment default; sweeps showed diminishing surprise improvements past it.
DEFAULT_LAMBDA = 8.0


@dataclass(frozen=True)
class RiskConfig:
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lam must be finite and >= 0, got {self.lam}")


@dataclass(eq=False)
class RiskCostMap:
    """Planning cost grid plus the weight and provenance that produced it."""

    costs: ScalarMap
    lam: float
    provenance: str
    impassable: np.ndarray | None = field(default=None)  # H x W bool, optional

    @property
    def height(self) -> int:
        return self.costs.height

    @property
    def width(self) -> int:
        return self.costs.width


def build_risk_cost_map(maps: ConfidenceMaps, config: RiskConfig,
                        table: CostTable | None = None,
                        provenance: str = "confidence") -> RiskCostMap:
    """Apply the risk weight to confidence maps, pixelwise.

    When a table is given, pixels whose predicted class is flagged impassable
    are excluded from the planning graph via the mask.
    """
    base = maps.base_cost.values
    unc = maps.uncertainty.values
    if base.shape != unc.shape:
        raise ValueError("base cost and uncertainty shapes differ")
    if not (np.isfinite(base).all() and np.isfinite(unc).all()):
        raise ValueError("non-finite inputs to risk cost map")
    costs = base + config.lam * unc
    mask = None
    if table is not None:
        flags = table.impassable_mask()
        if flags.any():
            mask = flags[maps.prediction.labels]
    return RiskCostMap(ScalarMap(costs), lam=config.lam,
                       provenance=provenance, impassable=mask)


def ground_truth_cost_map(truth: LabelMap, table: CostTable) -> RiskCostMap:
    """Cost map straight from ground-truth labels; the zero-surprise reference."""
    if truth.num_classes != table.num_classes:
        raise ValueError(
            f"label map has {truth.num_classes} classes but table has {table.num_classes}"
        )
    costs = table.costs()[truth.labels]
    mask = None
    flags = table.impassable_mask()
    if flags.any():
        mask = flags[truth.labels]
    return RiskCostMap(ScalarMap(costs), lam=0.0,
                       provenance="ground-truth", impassable=mask)


def write_risk_cost_map(rmap: RiskCostMap, path) -> None:
    """Scalar-map file plus a JSON sidecar recording lambda and provenance."""
    write_scalar_map(rmap.costs, path)
    sidecar = {"lambda": rmap.lam, "provenance": rmap.provenance}
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def read_risk_cost_map(path) -> RiskCostMap:
    costs = read_scalar_map(path)
    with open(str(path) + ".json", "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    return RiskCostMap(costs, lam=float(sidecar["lambda"]),
                       provenance=str(sidecar["provenance"]))

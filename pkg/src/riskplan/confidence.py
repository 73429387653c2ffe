"""Turns a softmax stack into prediction, base-cost, and uncertainty maps.

The same aggregation serves both uncertainty sources (test-time dropout
passes and bootstrap ensemble members); only the provenance of the stack
differs. Per pixel:

* mean softmax across passes -> predicted class (argmax, lowest index wins
  ties) -> base cost through the class cost table;
* per-class cost samples cost(c) * prob(t, p, c), their sample standard
  deviation across passes, averaged over classes -> a single nonnegative
  uncertainty value.

A single pass (T = 1) yields zero uncertainty by convention.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .taxonomy import CostTable
from .tensorio import LabelMap, ScalarMap, SoftmaxStack


@dataclass(eq=False)
class ConfidenceMaps:
    """Per-pixel outputs of confidence estimation over one softmax stack."""

    prediction: LabelMap
    base_cost: ScalarMap
    uncertainty: ScalarMap
    mean_softmax: np.ndarray  # H x W x C, rows sum to 1

    def __post_init__(self):
        if (self.uncertainty.values < 0).any():
            raise ValueError("uncertainty must be nonnegative")


def _check_sizes(stack: SoftmaxStack, table: CostTable) -> None:
    if stack.classes != table.num_classes:
        raise ValueError(
            f"stack has {stack.classes} classes but table has {table.num_classes}"
        )


def estimate_confidence(stack: SoftmaxStack, table: CostTable) -> ConfidenceMaps:
    """Aggregate a stochastic stack into prediction and uncertainty maps."""
    _check_sizes(stack, table)
    probs = np.asarray(stack.probs, dtype=np.float64)
    costs = table.costs()

    mean_softmax = probs.mean(axis=0)
    prediction = np.argmax(mean_softmax, axis=2)
    base_cost = costs[prediction]

    if stack.passes == 1:
        uncertainty = np.zeros(prediction.shape, dtype=np.float64)
    else:
        cost_samples = probs * costs  # T x H x W x C, belief-weighted class costs
        per_class_std = cost_samples.std(axis=0, ddof=1)
        uncertainty = per_class_std.mean(axis=2)

    return ConfidenceMaps(
        prediction=LabelMap(prediction, num_classes=table.num_classes),
        base_cost=ScalarMap(base_cost),
        uncertainty=ScalarMap(uncertainty),
        mean_softmax=mean_softmax,
    )


def deterministic_baseline(stack: SoftmaxStack, table: CostTable) -> ConfidenceMaps:
    """Risk-neutral view: a single forward pass, no uncertainty.

    Uses pass 0 of the stack as the deterministic network output; prediction
    is its argmax and the uncertainty map is identically zero.
    """
    _check_sizes(stack, table)
    first = np.asarray(stack.probs[0], dtype=np.float64)
    prediction = np.argmax(first, axis=2)
    return ConfidenceMaps(
        prediction=LabelMap(prediction, num_classes=table.num_classes),
        base_cost=ScalarMap(table.costs()[prediction]),
        uncertainty=ScalarMap(np.zeros(prediction.shape, dtype=np.float64)),
        mean_softmax=first,
    )

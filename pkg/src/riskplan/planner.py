"""A* search over the pixel grid of a risk cost map.

Conventions (applied identically to every planner variant so comparisons
stay internally valid):

* 8-connectivity; a diagonal step costs the entered pixel's value, same as
  an axis step (path cost is a pixel sum, not a metric length);
* cost accrues on entering a pixel, so the start pixel is free and a
  start == goal query costs 0;
* heuristic: Chebyshev distance to goal times the cheapest passable pixel
  (admissible and consistent under the entered-pixel-sum model);
* ties: lower f, then lower g, then first-pushed.

The search core is compiled (Cython) when available, with a pure-Python
fallback selected at import time. Set RISKPLAN_PURE_PYTHON=1 to force the
fallback.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .riskmap import RiskCostMap
from .tensorio import ScalarMap

if os.environ.get("RISKPLAN_PURE_PYTHON", "") not in ("", "0"):
    from . import _astar_py as _core
else:
    try:
        from . import _astar_cy as _core  # type: ignore[no-redef]
    except ImportError:
        from . import _astar_py as _core  # type: ignore[no-redef]

#: Which search core this process is using ("compiled" or "python").
ACTIVE_CORE: str = _core.CORE_NAME


class UnreachableError(RuntimeError):
    """Goal cannot be reached from start on the passable subgraph."""


class PixelCoord(NamedTuple):
    y: int
    x: int


@dataclass(eq=False)
class PlannedPath:
    """Start-to-goal waypoint chain plus the planning-map cost of entering it."""

    waypoints: list[PixelCoord]
    planned_cost: float

    def __len__(self) -> int:
        return len(self.waypoints)


def _as_grid(mp: Union[RiskCostMap, ScalarMap]) -> np.ndarray:
    if isinstance(mp, RiskCostMap):
        return mp.costs.values
    if isinstance(mp, ScalarMap):
        return mp.values
    raise TypeError(f"expected RiskCostMap or ScalarMap, got {type(mp).__name__}")


def plan(rmap: RiskCostMap, start: PixelCoord, goal: PixelCoord) -> PlannedPath:
    """Cost-minimal 8-connected path from start to goal on the cost map."""
    costs = np.ascontiguousarray(rmap.costs.values, dtype=np.float64)
    h, w = costs.shape
    start = PixelCoord(*start)
    goal = PixelCoord(*goal)
    for name, p in (("start", start), ("goal", goal)):
        if not (0 <= p.y < h and 0 <= p.x < w):
            raise ValueError(f"{name} {tuple(p)} outside {h}x{w} grid")

    if rmap.impassable is not None:
        passable = np.ascontiguousarray(~rmap.impassable, dtype=np.uint8)
        for name, p in (("start", start), ("goal", goal)):
            if not passable[p.y, p.x]:
                raise ValueError(f"{name} {tuple(p)} is impassable")
        min_cost = float(costs[passable.astype(bool)].min())
    else:
        passable = np.ones((h, w), dtype=np.uint8)
        min_cost = float(costs.min())

    result = _core.astar(costs, passable, start.y, start.x, goal.y, goal.x, min_cost)
    if result is None:
        raise UnreachableError(f"no path from {tuple(start)} to {tuple(goal)}")
    waypoints, cost = result
    return PlannedPath([PixelCoord(y, x) for y, x in waypoints], cost)


def path_cost_under(mp: Union[RiskCostMap, ScalarMap], path: PlannedPath) -> float:
    """Sum of the map's values over entered pixels (start excluded).

    Used to re-cost a path under a different map than the one it was planned
    on, e.g., ground-truth costing of a predicted-cost plan.
    """
    grid = _as_grid(mp)
    h, w = grid.shape
    total = 0.0
    for p in path.waypoints[1:]:
        if not (0 <= p.y < h and 0 <= p.x < w):
            raise ValueError(f"waypoint {tuple(p)} outside {h}x{w} grid")
        total += float(grid[p.y, p.x])
    return total


def write_path(path: PlannedPath, file_path) -> None:
    with open(file_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"PTH1 {len(path.waypoints)} {path.planned_cost!r}\n")
        for p in path.waypoints:
            fh.write(f"{p.y} {p.x}\n")


def read_path(file_path) -> PlannedPath:
    with open(file_path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    parts = lines[0].split() if lines else []
    if len(parts) != 3 or parts[0] != "PTH1":
        raise ValueError(f"{file_path}: bad path header")
    n = int(parts[1])
    cost = float(parts[2])
    coords = []
    for line in lines[1 : n + 1]:
        y, x = line.split()
        coords.append(PixelCoord(int(y), int(x)))
    if len(coords) != n:
        raise ValueError(f"{file_path}: expected {n} waypoints, found {len(coords)}")
    return PlannedPath(coords, cost)

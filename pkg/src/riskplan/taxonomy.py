"""Semantic class set, per-class traversal costs, and display colors.

Class indices are 0-based internally. File formats carry explicit indices,
so the numbering convention survives serialization unambiguously.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Finite stand-in cost for classes flagged impassable, so cost arithmetic
# and path sums stay finite. The planner additionally excludes flagged
# pixels from the search graph.
DEFAULT_IMPASSABLE_COST = 1.0e6

CSV_HEADER = "index,name,cost,r,g,b,impassable"


class TaxonomyError(ValueError):
    """Invalid class index or malformed cost table."""


@dataclass(frozen=True)
class ClassEntry:
    name: str
    cost: float
    color: tuple[int, int, int]
    impassable: bool = False


@dataclass(eq=False)
class CostTable:
    """Ordered class list mapping class index -> (name, cost, color)."""

    entries: list[ClassEntry]
    impassable_cost: float = DEFAULT_IMPASSABLE_COST
    _costs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.entries:
            raise TaxonomyError("cost table must have at least one class")
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise TaxonomyError("duplicate class names in cost table")
        for e in self.entries:
            if not np.isfinite(e.cost) or e.cost < 0:
                raise TaxonomyError(f"class {e.name!r} has invalid cost {e.cost}")
        costs = np.array(
            [self.impassable_cost if e.impassable else e.cost for e in self.entries],
            dtype=np.float64,
        )
        object.__setattr__(self, "_costs", costs)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def num_classes(self) -> int:
        return len(self.entries)

    def costs(self) -> np.ndarray:
        """Effective cost per class (impassable classes at the sentinel cost)."""
        return self._costs.copy()

    def impassable_mask(self) -> np.ndarray:
        return np.array([e.impassable for e in self.entries], dtype=bool)

    def colors(self) -> np.ndarray:
        return np.array([e.color for e in self.entries], dtype=np.uint8)

    def index_of(self, name: str) -> int:
        for i, e in enumerate(self.entries):
            if e.name == name:
                return i
        raise TaxonomyError(f"no class named {name!r}")


def cost_of(table: CostTable, class_index: int) -> float:
    """Effective traversal cost of one class, sentinel cost if impassable."""
    if not 0 <= class_index < len(table.entries):
        raise TaxonomyError(
            f"class index {class_index} out of range for {len(table.entries)}-class table"
        )
    return float(table._costs[class_index])


def builtin_aeroscapes_table() -> CostTable:
    """The 12-class aerial-scene taxonomy with its hand-designed costs."""
    rows = [
        ("Background", 20.0, (128, 128, 128)),
        ("Person", 140.0, (220, 20, 60)),
        ("Bike", 130.0, (119, 11, 32)),
        ("Car", 90.0, (0, 0, 142)),
        ("Drone", 7.0, (0, 226, 252)),
        ("Boat", 80.0, (0, 60, 100)),
        ("Animal", 120.0, (190, 153, 153)),
        ("Obstacle", 100.0, (250, 170, 30)),
        ("Construction", 110.0, (70, 70, 70)),
        ("Vegetation", 5.0, (107, 142, 35)),
        ("Road", 1.0, (128, 64, 128)),
        ("Sky", 150.0, (70, 130, 180)),
    ]
    return CostTable([ClassEntry(n, c, rgb) for n, c, rgb in rows])


def save_cost_table(table: CostTable, path) -> None:
    lines = [CSV_HEADER]
    for i, e in enumerate(table.entries):
        r, g, b = e.color
        lines.append(
            f"{i},{e.name},{e.cost!r},{r},{g},{b},{int(e.impassable)}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_cost_table(path, impassable_cost: float = DEFAULT_IMPASSABLE_COST) -> CostTable:
    """Parse a cost-table CSV; raises TaxonomyError naming the offending line."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    if not raw or raw[0].strip() != CSV_HEADER:
        raise TaxonomyError(f"{path}: line 1: expected header {CSV_HEADER!r}")
    entries: list[ClassEntry | None] = []
    rows = []
    for lineno, line in enumerate(raw[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise TaxonomyError(f"{path}: line {lineno}: expected 7 fields, got {len(parts)}")
        try:
            idx = int(parts[0])
            name = parts[1]
            cost = float(parts[2])
            color = (int(parts[3]), int(parts[4]), int(parts[5]))
            impassable = bool(int(parts[6]))
        except ValueError as exc:
            raise TaxonomyError(f"{path}: line {lineno}: {exc}") from exc
        if not np.isfinite(cost) or cost < 0:
            raise TaxonomyError(f"{path}: line {lineno}: invalid cost {parts[2]!r}")
        if any(not 0 <= ch <= 255 for ch in color):
            raise TaxonomyError(f"{path}: line {lineno}: color out of range")
        rows.append((lineno, idx, ClassEntry(name, cost, color, impassable)))
    if not rows:
        raise TaxonomyError(f"{path}: no class rows")
    entries = [None] * len(rows)
    for lineno, idx, entry in rows:
        if not 0 <= idx < len(rows) or entries[idx] is not None:
            raise TaxonomyError(f"{path}: line {lineno}: bad or repeated index {idx}")
        entries[idx] = entry
    names = [e.name for e in entries]
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise TaxonomyError(f"{path}: duplicate class name {sorted(dupes)[0]!r}")
    return CostTable(list(entries), impassable_cost=impassable_cost)

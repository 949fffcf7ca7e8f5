"""Generalized Hausdorff content and size-capped cover costs, solved exactly.

For a finite cell set E the infimum of sum h(diam C_i) over covers of E by
dyadic cubes is attained by an antichain of dyadic cubes, so it is computed
exactly by one pass of dynamic programming over the occupied cube tree:

    cost(Q) = min( h(diam Q), sum over occupied children of cost )

with "cover here" forced at the bottom cells.  ``min_level`` caps the size of
admissible cover cubes (only levels >= min_level may be chosen, encoding the
diameter bound delta = sqrt(n) * 2^-min_level); above that level the
recursion must descend.  Ties resolve to "cover here", so among optimal
covers the shallowest one is returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

from gmtkit.errors import InvalidInputError
from gmtkit.gauge import Gauge
from gmtkit.lattice import CellSet, DyadicCube, index_ancestor


@dataclass(frozen=True)
class CoverSolution:
    cost: float
    cover: tuple[DyadicCube, ...]
    min_level: int

    def cover_cost(self, h: Gauge) -> float:
        return float(sum(h(c.diameter()) for c in self.cover))


def dyadic_cover_cost(cells: CellSet, h: Gauge, min_level: int = 0) -> CoverSolution:
    """Exact optimal cover cost of `cells` with cover cubes at levels >= min_level."""
    if min_level < 0 or min_level > cells.depth:
        raise InvalidInputError(f"min_level {min_level} must lie in [0, depth={cells.depth}]")
    if not cells.cells:
        return CoverSolution(0.0, (), min_level)

    n, m = cells.n, cells.depth
    occupied: list[set[tuple[int, ...]]] = [set() for _ in range(m + 1)]
    occupied[m] = set(cells.cells)
    for level in range(m - 1, -1, -1):
        occupied[level] = {index_ancestor(idx, 1) for idx in occupied[level + 1]}

    diam = [sqrt(n) * 2.0 ** (-level) for level in range(m + 1)]
    cost: dict[tuple[int, ...], float] = {idx: h(diam[m]) for idx in occupied[m]}
    cover_here: list[dict[tuple[int, ...], bool]] = [dict() for _ in range(m + 1)]
    cover_here[m] = {idx: True for idx in occupied[m]}

    for level in range(m - 1, -1, -1):
        child_sum: dict[tuple[int, ...], float] = {}
        for idx in sorted(occupied[level + 1]):
            key = index_ancestor(idx, 1)
            child_sum[key] = child_sum.get(key, 0.0) + cost[idx]
        here = h(diam[level])
        nxt: dict[tuple[int, ...], float] = {}
        for idx in sorted(occupied[level]):
            if level >= min_level and here <= child_sum[idx]:
                nxt[idx] = here
                cover_here[level][idx] = True
            else:
                nxt[idx] = child_sum[idx]
                cover_here[level][idx] = False
        cost = nxt

    chosen: list[DyadicCube] = []
    stack = [(0, idx) for idx in sorted(occupied[0])]
    while stack:
        level, idx = stack.pop()
        if cover_here[level][idx]:
            chosen.append(DyadicCube(n, level, idx))
            continue
        for child in sorted(occupied[level + 1]):
            if index_ancestor(child, 1) == idx:
                stack.append((level + 1, child))
    chosen.sort(key=lambda c: (c.level, c.index))

    total = float(sum(cost[idx] for idx in sorted(occupied[0])))
    return CoverSolution(total, tuple(chosen), min_level)


def content(cells: CellSet, h: Gauge) -> float:
    """h-content: unconstrained optimal dyadic cover cost (min_level = 0)."""
    return dyadic_cover_cost(cells, h, 0).cost


def measure_profile(cells: CellSet, h: Gauge) -> list[float]:
    """Cover costs for min_level = 0..depth; nondecreasing since shrinking the
    admissible cube sizes only removes covers."""
    return [dyadic_cover_cost(cells, h, lvl).cost for lvl in range(cells.depth + 1)]

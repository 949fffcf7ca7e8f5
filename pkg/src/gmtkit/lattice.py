"""Dyadic cube addressing and finite cell sets on the unit cube.

A level-j dyadic cube in [0,1]^n is the half-open box

    prod_i [ index_i * 2^-j, (index_i + 1) * 2^-j ),

addressed canonically by ``(level, index)`` with integer coordinates in
[0, 2^j).  Half-open boxes make same-level cubes pairwise disjoint, so every
point of [0,1)^n lies in exactly one cube per level and membership questions
never need tie-breaking.  Coordinates are derived from indices on demand and
stay exact in double precision for the working depths used here (level <= 50).

A ``CellSet`` is a finite union of depth-m cells (level-m cubes) and is the
discrete stand-in for a compact subset of [0,1]^n.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import floor, sqrt

import numpy as np

from gmtkit.errors import InvalidInputError
from gmtkit.utils import load_json, write_canonical

MAX_LEVEL = 60


def _check_level(level: int) -> None:
    if not isinstance(level, int) or level < 0 or level > MAX_LEVEL:
        raise InvalidInputError(f"level must be an integer in [0, {MAX_LEVEL}], got {level!r}")


@dataclass(frozen=True)
class DyadicCube:
    """One dyadic cube: ambient dimension, level, integer index vector."""

    n: int
    level: int
    index: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInputError(f"ambient dimension must be >= 1, got {self.n}")
        _check_level(self.level)
        idx = tuple(int(i) for i in self.index)
        object.__setattr__(self, "index", idx)
        if len(idx) != self.n:
            raise InvalidInputError(f"index length {len(idx)} != dimension {self.n}")
        top = 1 << self.level
        for i in idx:
            if i < 0 or i >= top:
                raise InvalidInputError(f"index {idx} out of range at level {self.level}")

    def side(self) -> float:
        return 2.0 ** (-self.level)

    def diameter(self) -> float:
        # sqrt(n) * 2^-level, exact scaling since 2^-level is a power of two
        return sqrt(self.n) * 2.0 ** (-self.level)

    def lower(self) -> np.ndarray:
        s = self.side()
        return np.array([i * s for i in self.index], dtype=float)

    def upper(self) -> np.ndarray:
        s = self.side()
        return np.array([(i + 1) * s for i in self.index], dtype=float)

    def center(self) -> np.ndarray:
        s = self.side()
        return np.array([(i + 0.5) * s for i in self.index], dtype=float)

    def contains_point(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(self.lower() <= p) and np.all(p < self.upper()))

    def parent(self) -> "DyadicCube":
        if self.level == 0:
            raise InvalidInputError("the root cube has no parent")
        return DyadicCube(self.n, self.level - 1, tuple(i >> 1 for i in self.index))

    def ancestor(self, level: int) -> "DyadicCube":
        """The unique level-`level` cube containing this one (level <= self.level)."""
        if level > self.level or level < 0:
            raise InvalidInputError(f"ancestor level {level} not in [0, {self.level}]")
        shift = self.level - level
        return DyadicCube(self.n, level, tuple(i >> shift for i in self.index))


def cube_at(point, level: int, n: int | None = None) -> DyadicCube:
    """The level-j cube containing a point of [0,1)^n.

    Scaling by 2^level is exact for double inputs, so the floor is unambiguous
    at representable coordinates.
    """
    p = np.asarray(point, dtype=float)
    if p.ndim != 1:
        raise InvalidInputError("point must be a flat coordinate vector")
    if n is None:
        n = p.shape[0]
    if p.shape[0] != n:
        raise InvalidInputError(f"point has {p.shape[0]} coordinates, expected {n}")
    _check_level(level)
    if np.any(p < 0.0) or np.any(p >= 1.0):
        raise InvalidInputError(f"point {p.tolist()} outside [0,1)^n")
    scale = float(1 << level)
    index = tuple(int(floor(c * scale)) for c in p)
    return DyadicCube(n, level, index)


def children(cube: DyadicCube) -> list[DyadicCube]:
    """All 2^n children, in lexicographic index order."""
    if cube.level >= MAX_LEVEL:
        raise InvalidInputError(f"cannot descend below level {MAX_LEVEL}")
    out = []
    for bits in product((0, 1), repeat=cube.n):
        idx = tuple(2 * i + b for i, b in zip(cube.index, bits))
        out.append(DyadicCube(cube.n, cube.level + 1, idx))
    out.sort(key=lambda c: c.index)
    return out


def descendants(cube: DyadicCube, dlevel: int) -> list[DyadicCube]:
    """All 2^(n*dlevel) descendants `dlevel` levels down, lexicographically ordered."""
    if dlevel < 0:
        raise InvalidInputError(f"dlevel must be >= 0, got {dlevel}")
    _check_level(cube.level + dlevel)
    step = 1 << dlevel
    ranges = [range(i * step, (i + 1) * step) for i in cube.index]
    out = [DyadicCube(cube.n, cube.level + dlevel, idx) for idx in product(*ranges)]
    out.sort(key=lambda c: c.index)
    return out


def index_ancestor(index: tuple[int, ...], levels_up: int) -> tuple[int, ...]:
    return tuple(i >> levels_up for i in index)


def index_first_descendant(index: tuple[int, ...], dlevel: int) -> tuple[int, ...]:
    """Lexicographically smallest descendant index `dlevel` levels down."""
    return tuple(i << dlevel for i in index)


def cube_bounds(level: int, index: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    s = 2.0 ** (-level)
    lo = np.array([i * s for i in index], dtype=float)
    return lo, lo + s


def dist_point_to_box(point: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    """Euclidean distance from a point to a closed axis-aligned box."""
    gap = np.maximum(np.maximum(lo - point, point - hi), 0.0)
    return float(np.sqrt(np.dot(gap, gap)))


@dataclass(frozen=True)
class CellSet:
    """A finite set of depth-m cells representing a subset of [0,1]^n."""

    n: int
    depth: int
    cells: frozenset[tuple[int, ...]]

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInputError(f"ambient dimension must be >= 1, got {self.n}")
        _check_level(self.depth)
        norm = frozenset(tuple(int(i) for i in c) for c in self.cells)
        object.__setattr__(self, "cells", norm)
        top = 1 << self.depth
        for c in norm:
            if len(c) != self.n:
                raise InvalidInputError(f"cell {c} has wrong dimension (expected {self.n})")
            if any(i < 0 or i >= top for i in c):
                raise InvalidInputError(f"cell index {c} out of range at depth {self.depth}")

    def __len__(self) -> int:
        return len(self.cells)

    def sorted_cells(self) -> list[tuple[int, ...]]:
        return sorted(self.cells)

    def cubes(self) -> list[DyadicCube]:
        return [DyadicCube(self.n, self.depth, c) for c in self.sorted_cells()]

    def contains_cell(self, index: tuple[int, ...]) -> bool:
        return tuple(index) in self.cells

    def occupied_ancestors(self, level: int) -> set[tuple[int, ...]]:
        """Indices of level-`level` cubes meeting the set (level <= depth)."""
        if level > self.depth:
            raise InvalidInputError(f"level {level} deeper than cell depth {self.depth}")
        shift = self.depth - level
        return {index_ancestor(c, shift) for c in self.cells}

    def refined(self, depth: int) -> "CellSet":
        """The same set expressed with cells at a deeper uniform depth."""
        if depth < self.depth:
            raise InvalidInputError(f"cannot coarsen from depth {self.depth} to {depth}")
        if depth == self.depth:
            return self
        d = depth - self.depth
        step = 1 << d
        cells = set()
        for c in self.cells:
            for offs in product(range(step), repeat=self.n):
                cells.add(tuple((i << d) + o for i, o in zip(c, offs)))
        return CellSet(self.n, depth, frozenset(cells))

    def sample_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Uniform sample: a uniformly chosen cell, then a uniform point in it."""
        cells = self.sorted_cells()
        if not cells:
            raise InvalidInputError("cannot sample from an empty cell set")
        picks = rng.integers(0, len(cells), size=count)
        side = 2.0 ** (-self.depth)
        base = np.array([cells[i] for i in picks], dtype=float) * side
        return base + rng.random((count, self.n)) * side

    def to_json_obj(self) -> dict:
        return {
            "n": self.n,
            "depth": self.depth,
            "cells": [list(c) for c in self.sorted_cells()],
        }

    @staticmethod
    def from_json_obj(obj: dict) -> "CellSet":
        try:
            n = int(obj["n"])
            depth = int(obj["depth"])
            cells = frozenset(tuple(int(i) for i in c) for c in obj["cells"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed cell set object: {exc}") from exc
        return CellSet(n, depth, cells)

    def save(self, path) -> None:
        write_canonical(path, self.to_json_obj())

    @staticmethod
    def load(path) -> "CellSet":
        return CellSet.from_json_obj(load_json(path))


def union(sets: list[CellSet]) -> CellSet:
    """Union of cell sets with a common ambient dimension, refined to the deepest depth."""
    if not sets:
        raise InvalidInputError("union of zero cell sets")
    n = sets[0].n
    if any(s.n != n for s in sets):
        raise InvalidInputError("union requires a common ambient dimension")
    depth = max(s.depth for s in sets)
    cells: set[tuple[int, ...]] = set()
    for s in sets:
        cells.update(s.refined(depth).cells)
    return CellSet(n, depth, frozenset(cells))

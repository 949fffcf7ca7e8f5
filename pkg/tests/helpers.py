"""Brute-force oracles, written independently of the library internals.

Everything here trades efficiency for obviousness: plain loops, explicit
enumeration, no tree tricks.  Oracles are only run on small instances.
"""

from __future__ import annotations

import math
from itertools import product

import numpy as np

from gmtkit.gauge import Gauge
from gmtkit.lattice import CellSet


def _diam(n: int, level: int) -> float:
    return math.sqrt(n) * 2.0 ** (-level)


def _child_indices(idx: tuple[int, ...]) -> list[tuple[int, ...]]:
    n = len(idx)
    return [tuple(2 * idx[i] + b[i] for i in range(n)) for b in product((0, 1), repeat=n)]


def enumerate_cover_costs(cells: CellSet, h: Gauge, min_level: int = 0) -> float:
    """Minimum cover cost by explicit enumeration of every dyadic antichain
    cover of the occupied subtree (cube levels >= min_level).  Exponential;
    keep inputs tiny."""
    n, depth = cells.n, cells.depth
    occupied = set(cells.cells)

    def occupied_below(level: int, idx: tuple[int, ...]) -> bool:
        shift = depth - level
        lo = tuple(i << shift for i in idx)
        hi = tuple((i + 1) << shift for i in idx)
        return any(all(lo[d] <= c[d] < hi[d] for d in range(n)) for c in occupied)

    def covers(level: int, idx: tuple[int, ...]) -> list[float]:
        if not occupied_below(level, idx):
            return [0.0]
        options: list[float] = []
        if level >= min_level:
            options.append(h(_diam(n, level)))
        if level < depth:
            parts = [covers(level + 1, c) for c in _child_indices(idx)]
            options.extend(sum(combo) for combo in product(*parts))
        return options

    return min(covers(0, tuple(0 for _ in range(n))))


def brute_cube_mass(masses: dict, cell_level: int, level: int, idx: tuple[int, ...]) -> float:
    """Sum of cell masses inside the level-`level` cube, by direct scan."""
    assert level <= cell_level
    shift = cell_level - level
    total = 0.0
    for cell in sorted(masses):
        if tuple(c >> shift for c in cell) == tuple(idx):
            total += masses[cell]
    return total


def brute_frostman_max_ratio(masses: dict, n: int, cell_level: int, h: Gauge) -> float:
    """Max over all cubes meeting the support of mass(Q)/h(diam Q), scanning
    every occupied ancestor at every level."""
    worst = 0.0
    for level in range(cell_level + 1):
        shift = cell_level - level
        seen = {tuple(c >> shift for c in cell) for cell in masses}
        cap = h(_diam(n, level))
        for idx in sorted(seen):
            worst = max(worst, brute_cube_mass(masses, cell_level, level, idx) / cap)
    return worst


def brute_ball_mass(points: np.ndarray, weights: np.ndarray, x, r: float) -> float:
    """Closed-ball restricted mass with the library's boundary slack."""
    x = np.asarray(x, dtype=float)
    total = 0.0
    for p, w in zip(points, weights):
        d2 = float(((p - x) ** 2).sum())
        if d2 <= r * r * (1.0 + 1e-12):
            total += float(w)
    return total


def brute_line_fit(points: np.ndarray, weights: np.ndarray, x, r: float, angles: int = 3600):
    """Best line through the restricted barycenter by plain angle scan (n=2).

    Returns (min residual, best angle).  Upper-bounds the true optimum to
    O((pi/angles)^2) relative error.
    """
    x = np.asarray(x, dtype=float)
    sel_p, sel_w = [], []
    for p, w in zip(points, weights):
        if float(((p - x) ** 2).sum()) <= r * r * (1.0 + 1e-12):
            sel_p.append(p)
            sel_w.append(float(w))
    if not sel_p:
        raise ValueError("empty ball")
    pts = np.array(sel_p)
    wts = np.array(sel_w)
    bary = (pts * wts[:, None]).sum(axis=0) / wts.sum()
    centered = pts - bary
    best_val, best_ang = float("inf"), 0.0
    for i in range(angles):
        ang = math.pi * i / angles
        normal = np.array([-math.sin(ang), math.cos(ang)])
        val = float((wts * (centered @ normal) ** 2).sum())
        if val < best_val:
            best_val, best_ang = val, ang
    return best_val, best_ang

"""Sparse measure extraction, sparsity certificates, and hole witnesses.

An l-sparse set confines itself, at each certified scale l_j, to a single
level-(l_j + ell) subcube inside every level-l_j cube it meets.  Such sets
carry holes: on every affine k-plane section through a point of the set
there is a point at definite distance (a fixed multiple of 2^-l_j) from the
union of the selected subcubes, which is the quantitative obstruction to
touching a rectifiable curve or surface in positive measure.

``build_sparse_measure`` runs the scale-by-scale reduction: given an input
measure with cube masses dominated by a gauge h whose ratio h(r)/r^k decays,
it picks certified levels l_j where h(diam)/diam^k <= 2^(-n*j*ell), and inside
every occupied level-l_j cube moves all mass onto one maximal-mass
level-(l_j + ell) subcube (lexicographic tie-break), rescaled so cube masses
at levels <= l_j are preserved exactly.

Representation.  The evolving measure is stored as a disjoint antichain of
``nodes`` (cube, mass), each read as uniform inside its cube, plus a list of
``windows`` (start, ell): inside any node at level <= start, digits at levels
start+1 .. start+ell are forced to zero.  A window records that a scale acted
on territory that was uniform at selection time, where every subcube mass
ties and the lexicographically first subcube wins in closed form.  This keeps
deep working depths (scales far below the explicit cells) exact and cheap: no
cell enumeration ever happens below the antichain, and cube masses, support
membership, caps, and preservation checks all evaluate in closed form.
Constructions whose input is fully explicit never create windows and return
an ordinary :class:`~gmtkit.frostman.CellMeasure`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from math import sqrt

import numpy as np

from gmtkit.errors import DepthBudgetError, InvalidInputError, VerificationError
from gmtkit.frostman import CellMeasure
from gmtkit.gauge import Gauge, unit_ball_volume
from gmtkit.lattice import (
    CellSet,
    DyadicCube,
    cube_bounds,
    dist_point_to_box,
    index_ancestor,
    index_first_descendant,
)
from gmtkit.utils import load_json, thread_count, write_canonical

PRESERVE_TOL = 1e-12
CAP_TOL = 1e-9


# ---------------------------------------------------------------------------
# planes and frames


@dataclass(frozen=True)
class AffinePlane:
    """Affine k-plane: base point plus k orthonormal direction rows."""

    base: np.ndarray
    frame: np.ndarray

    def __post_init__(self):
        base = np.asarray(self.base, dtype=float).copy()
        frame = np.asarray(self.frame, dtype=float).copy()
        if frame.ndim != 2 or base.ndim != 1 or frame.shape[1] != base.shape[0]:
            raise InvalidInputError("frame must be (k, n) with a length-n base point")
        gram = frame @ frame.T
        if not np.allclose(gram, np.eye(frame.shape[0]), atol=1e-10):
            raise InvalidInputError("frame rows must be orthonormal to 1e-10")
        base.setflags(write=False)
        frame.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "frame", frame)

    @property
    def k(self) -> int:
        return self.frame.shape[0]

    @property
    def n(self) -> int:
        return self.frame.shape[1]

    def points(self, coords: np.ndarray) -> np.ndarray:
        return self.base + np.atleast_2d(coords) @ self.frame


def random_orthonormal_frame(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """Haar-random k-frame in R^n (Gaussian matrix, QR, sign-fixed)."""
    if not 1 <= k <= n:
        raise InvalidInputError(f"need 1 <= k <= n, got k={k}, n={n}")
    g = rng.standard_normal((n, k))
    q, r = np.linalg.qr(g)
    signs = np.where(np.diag(r) >= 0.0, 1.0, -1.0)
    return (q * signs).T


# ---------------------------------------------------------------------------
# sparsity parameter


def min_sparsity_parameter(n: int, k: int, alpha_mode: str = "ball-bound") -> int:
    """Smallest ell with 3^n * 2^(-ell*k) * alpha < omega_k * 2^-k.

    alpha bounds the k-area a k-plane can cut out of a unit cube:
    'ball-bound' uses omega_k * (sqrt(n)/2)^k (the slice sits inside a ball of
    the circumscribed radius), 'exact-diagonal' uses the tight diagonal length
    sqrt(n), available for k = 1 only.
    """
    if not 1 <= k < n:
        raise InvalidInputError(f"need 1 <= k < n, got k={k}, n={n}")
    if alpha_mode == "exact-diagonal":
        if k != 1:
            raise InvalidInputError("exact-diagonal alpha is only available for k = 1")
        alpha = sqrt(n)
    elif alpha_mode == "ball-bound":
        alpha = unit_ball_volume(k) * (sqrt(n) / 2.0) ** k
    else:
        raise InvalidInputError(f"unknown alpha_mode {alpha_mode!r}")
    rhs = unit_ball_volume(k) * 2.0 ** (-k)
    for ell in range(1, 200):
        if 3 ** n * 2.0 ** (-ell * k) * alpha < rhs:
            return ell
    raise VerificationError("sparsity parameter search did not terminate")


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class ScaleFamily:
    """Selections for one certified scale: explicit pairs, optionally extended
    by the lexicographic-first rule over territory that was uniform at
    selection time (``pattern``)."""

    level: int
    ell: int
    pairs: dict
    pattern: bool = False

    def __post_init__(self):
        clean = {}
        for q, sel in self.pairs.items():
            qt, st = tuple(int(i) for i in q), tuple(int(i) for i in sel)
            if index_ancestor(st, self.ell) != qt:
                raise InvalidInputError(f"selected cube {st} not inside {qt} at gap {self.ell}")
            clean[qt] = st
        object.__setattr__(self, "pairs", clean)

    def selected(self, q: tuple[int, ...]) -> tuple[int, ...] | None:
        got = self.pairs.get(tuple(q))
        if got is not None:
            return got
        if self.pattern:
            return index_first_descendant(tuple(q), self.ell)
        return None


@dataclass(frozen=True)
class SparsityCertificate:
    n: int
    ell: int
    scales: tuple[int, ...]
    families: tuple[ScaleFamily, ...]

    def __post_init__(self):
        scales = tuple(int(s) for s in self.scales)
        object.__setattr__(self, "scales", scales)
        if self.ell < 1:
            raise InvalidInputError(f"ell must be >= 1, got {self.ell}")
        if not scales:
            raise InvalidInputError("a certificate needs at least one scale")
        for a, b in zip(scales, scales[1:]):
            if b < a + self.ell:
                raise InvalidInputError(f"scales {a}, {b} closer than ell = {self.ell}")
        if len(self.families) != len(scales):
            raise InvalidInputError("one family per scale required")
        for fam, lvl in zip(self.families, scales):
            if fam.level != lvl or fam.ell != self.ell:
                raise InvalidInputError("family levels must match the scale list")

    def to_json_obj(self) -> dict:
        fams = []
        for fam in self.families:
            entry: dict = {
                "scale": fam.level,
                "pairs": [[list(q), list(fam.pairs[q])] for q in sorted(fam.pairs)],
            }
            if fam.pattern:
                entry["pattern"] = "lex-first"
            fams.append(entry)
        return {"n": self.n, "ell": self.ell, "scales": list(self.scales), "families": fams}

    @staticmethod
    def from_json_obj(obj: dict) -> "SparsityCertificate":
        try:
            ell = int(obj["ell"])
            n = int(obj["n"])
            scales = tuple(int(s) for s in obj["scales"])
            fams = []
            for entry in obj["families"]:
                pairs = {tuple(q): tuple(s) for q, s in entry["pairs"]}
                fams.append(
                    ScaleFamily(int(entry["scale"]), ell, pairs, entry.get("pattern") == "lex-first")
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed certificate object: {exc}") from exc
        return SparsityCertificate(n, ell, scales, tuple(fams))

    def save(self, path) -> None:
        write_canonical(path, self.to_json_obj())

    @staticmethod
    def load(path) -> "SparsityCertificate":
        return SparsityCertificate.from_json_obj(load_json(path))


def check_sparse(cells: CellSet, cert: SparsityCertificate) -> bool:
    """Does every cell sit inside the selected subcube at every certified scale?"""
    if cells.n != cert.n:
        raise InvalidInputError(f"dimension mismatch: cells n={cells.n}, certificate n={cert.n}")
    if cert.scales[-1] + cert.ell > cells.depth:
        raise InvalidInputError(
            f"certificate reaches level {cert.scales[-1] + cert.ell} below cell depth {cells.depth}"
        )
    for fam in cert.families:
        up_q = cells.depth - fam.level
        up_s = cells.depth - (fam.level + fam.ell)
        for cell in cells.sorted_cells():
            sel = fam.selected(index_ancestor(cell, up_q))
            if sel is None or index_ancestor(cell, up_s) != sel:
                return False
    return True


# ---------------------------------------------------------------------------
# lazily represented measures


def _interior_factor(
    n: int,
    node_level: int,
    level: int,
    idx: tuple[int, ...],
    windows: tuple[tuple[int, int], ...],
) -> float:
    """Mass fraction of a level-`level` cube strictly inside a uniform node.

    Descending one level splits mass by 2^-n outside windows; inside a window
    the zero-digit branch keeps the whole mass and every other branch drops
    to zero.
    """
    free = 0
    for l in range(node_level + 1, level + 1):
        inside = None
        for a, e in windows:
            if a >= node_level and a < l <= a + e:
                inside = (a, e)
                break
        if inside is None:
            free += 1
        else:
            shift = level - l
            if any((c >> shift) & 1 for c in idx):
                return 0.0
    return 2.0 ** (-n * free)


def _occupancy(sm: "SparseMeasure", level: int):
    """O(1)-per-query support membership test for level-`level` cubes.

    Cubes holding a whole node are found through an ancestor set; cubes
    strictly inside a node are positive exactly when their window digits
    vanish.
    """
    anc: set[tuple[int, ...]] = set()
    coarse: dict[int, set[tuple[int, ...]]] = {}
    for (t, idx) in sm.nodes:
        if t >= level:
            anc.add(index_ancestor(idx, t - level))
        else:
            coarse.setdefault(t, set()).add(idx)
    wins = sm.windows
    n = sm.n

    def occupied(q) -> bool:
        q = tuple(q)
        if q in anc:
            return True
        for t, idxs in coarse.items():
            if index_ancestor(q, level - t) in idxs:
                return _interior_factor(n, t, level, q, wins) > 0.0
        return False

    return occupied


@dataclass(frozen=True)
class SparseMeasure:
    """Measure as a disjoint uniform-node antichain plus zero-digit windows."""

    n: int
    depth: int
    nodes: dict  # (level, index tuple) -> mass
    windows: tuple = ()

    def __post_init__(self):
        clean = {}
        for (lvl, idx), mass in self.nodes.items():
            key = (int(lvl), tuple(int(i) for i in idx))
            if key[0] < 0 or key[0] > self.depth:
                raise InvalidInputError(f"node level {key[0]} outside [0, depth={self.depth}]")
            if float(mass) > 0.0:
                clean[key] = float(mass)
        object.__setattr__(self, "nodes", clean)
        object.__setattr__(self, "_keys", tuple(sorted(clean)))
        wins = tuple((int(a), int(e)) for a, e in self.windows)
        for a, e in wins:
            if e < 1 or a < 0 or a + e > self.depth:
                raise InvalidInputError(f"window ({a}, {e}) outside depth {self.depth}")
        object.__setattr__(self, "windows", wins)

    @property
    def total(self) -> float:
        return float(sum(self.nodes[k] for k in self._keys))

    def mass_at(self, level: int, idx: tuple[int, ...]) -> float:
        if level > self.depth:
            raise InvalidInputError(f"level {level} below declared depth {self.depth}")
        idx = tuple(idx)
        total = 0.0
        for (t, nidx) in self._keys:
            w = self.nodes[(t, nidx)]
            if t >= level:
                if index_ancestor(nidx, t - level) == idx:
                    total += w
            elif index_ancestor(idx, level - t) == nidx:
                total += w * _interior_factor(self.n, t, level, idx, self.windows)
        return total

    def cube_mass(self, cube: DyadicCube) -> float:
        if cube.n != self.n:
            raise InvalidInputError(f"cube dimension {cube.n} != measure dimension {self.n}")
        return self.mass_at(cube.level, cube.index)

    def is_explicit(self) -> bool:
        if self.windows:
            return False
        levels = {lvl for lvl, _ in self.nodes}
        return len(levels) <= 1

    def to_cell_measure(self) -> CellMeasure:
        if not self.is_explicit():
            raise InvalidInputError("measure has uniform-territory structure; no flat cell form")
        level = max((lvl for lvl, _ in self.nodes), default=self.depth)
        masses = {idx: m for (lvl, idx), m in self.nodes.items()}
        return CellMeasure(self.n, self.depth, masses, level)

    def support_sample_cells(self, level: int, count: int, rng: np.random.Generator) -> CellSet:
        """Distinct support cells at `level`, drawn mass-weighted (deduplicated).

        The descent stays in integer coordinates: a float round trip at deep
        levels can round a point across a cell boundary and off the support.
        """
        if not 0 <= level <= self.depth:
            raise InvalidInputError(f"level must lie in [0, {self.depth}], got {level}")
        keys = self._keys
        if not keys:
            raise InvalidInputError("cannot sample from the zero measure")
        w = np.array([self.nodes[k] for k in keys], dtype=float)
        picks = rng.choice(len(keys), size=count, p=w / w.sum())
        cells = set()
        for pick in picks:
            t, idx = keys[pick]
            if t >= level:
                cells.add(index_ancestor(idx, t - level))
                continue
            coords = list(idx)
            for l in range(t + 1, level + 1):
                windowed = any(a >= t and a < l <= a + e for a, e in self.windows)
                bits = (0,) * self.n if windowed else tuple(rng.integers(0, 2, size=self.n))
                coords = [2 * c + b for c, b in zip(coords, bits)]
            cells.add(tuple(coords))
        return CellSet(self.n, level, frozenset(cells))

    def sample_support_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Mass-weighted points of the support: pick a node, then descend with
        uniform digits outside windows and forced zeros inside them."""
        keys = self._keys
        if not keys:
            raise InvalidInputError("cannot sample from the zero measure")
        w = np.array([self.nodes[k] for k in keys], dtype=float)
        picks = rng.choice(len(keys), size=count, p=w / w.sum())
        out = np.empty((count, self.n), dtype=float)
        for row, pick in enumerate(picks):
            t, idx = keys[pick]
            coords = list(idx)
            for l in range(t + 1, self.depth + 1):
                windowed = any(a >= t and a < l <= a + e for a, e in self.windows)
                bits = (0,) * self.n if windowed else tuple(rng.integers(0, 2, size=self.n))
                coords = [2 * c + b for c, b in zip(coords, bits)]
            frac = rng.random(self.n)
            side = 2.0 ** (-self.depth)
            base = np.array(coords, dtype=float) * side
            pt = base + frac * side
            # rounding at deep levels can push the sum onto the next cell's
            # boundary; pull such points back inside the half-open cell
            hi = base + side
            over = pt >= hi
            pt[over] = np.nextafter(hi[over], base[over])
            out[row] = pt
        return out

    def ancestor_rollup(self, max_level: int) -> dict[tuple[int, tuple[int, ...]], float]:
        """Aggregated masses of every cube at level <= max_level containing a node."""
        agg: dict[tuple[int, tuple[int, ...]], float] = {}
        for (t, idx) in self._keys:
            w = self.nodes[(t, idx)]
            for level in range(0, min(t, max_level) + 1):
                key = (level, index_ancestor(idx, t - level))
                agg[key] = agg.get(key, 0.0) + w
        return agg

    def to_json_obj(self) -> dict:
        return {
            "n": self.n,
            "depth": self.depth,
            "nodes": [[lvl, list(idx), self.nodes[(lvl, idx)]] for lvl, idx in sorted(self.nodes)],
            "windows": [list(w) for w in self.windows],
        }

    @staticmethod
    def from_json_obj(obj: dict) -> "SparseMeasure":
        try:
            nodes = {(int(lvl), tuple(int(i) for i in idx)): float(m) for lvl, idx, m in obj["nodes"]}
            wins = tuple((int(a), int(e)) for a, e in obj["windows"])
            return SparseMeasure(int(obj["n"]), int(obj["depth"]), nodes, wins)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed sparse measure object: {exc}") from exc

    def save(self, path) -> None:
        write_canonical(path, self.to_json_obj())

    @staticmethod
    def load(path) -> "SparseMeasure":
        return SparseMeasure.from_json_obj(load_json(path))


# ---------------------------------------------------------------------------
# the construction


@dataclass(frozen=True)
class SparseConstruction:
    """Full record of one sparse-measure construction, stage by stage."""

    base: CellMeasure  # normalized input
    h_label: str
    k: int
    ell: int
    stages: tuple[SparseMeasure, ...]  # stages[0] initial, stages[j] after scale j
    certificate: SparsityCertificate
    normalized: bool
    norm_constant: float  # B = max(1, 1/original total)
    original_total: float
    selection_ratios: tuple[float, ...]  # per scale: min over cubes of sel_mass*2^(n ell)/cube_mass

    @property
    def result(self) -> SparseMeasure:
        return self.stages[-1]

    def result_measure(self):
        """CellMeasure when the run stayed fully explicit, else the lazy form."""
        out = self.result
        return out.to_cell_measure() if out.is_explicit() else out


def certified_scales(h: Gauge, k: int, n: int, ell: int, depth: int) -> list[int]:
    """Levels passing the scale rule h(diam)/diam^k <= 2^(-n*j*ell), spaced >= ell.

    The rule must hold at every level from the chosen one down to `depth`,
    so the suffix maximum of the ratio sequence is what gets compared.
    """
    root = sqrt(n)
    ratios = []
    for l in range(depth + 1):
        d = root * 2.0 ** (-l)
        dk = d ** k
        ratios.append(h(d) / dk)
    suffix = list(ratios)
    for l in range(depth - 1, -1, -1):
        suffix[l] = max(suffix[l], suffix[l + 1])

    scales: list[int] = []
    j = 1
    lmin = 0
    while True:
        thresh = 2.0 ** (-n * j * ell)
        found = None
        for l in range(lmin, depth + 1):
            if suffix[l] <= thresh:
                found = l
                break
        if found is None:
            if j == 1:
                raise VerificationError(
                    f"gauge {h.label} never drops below the first scale threshold "
                    f"2^-{n * ell} within depth {depth}; it fails the vanishing requirement",
                    stage="sparsify",
                )
            break
        if found + ell > depth:
            if j == 1:
                raise DepthBudgetError(
                    f"first certified scale needs depth {found + ell}, have {depth}",
                    required_depth=found + ell,
                )
            break
        scales.append(found)
        lmin = found + ell
        j += 1
    return scales


def _apply_scale(
    n: int,
    nodes: dict,
    level: int,
    ell: int,
) -> tuple[dict, bool, dict, float]:
    """One reduction step; returns (new nodes, window added, pairs, min selection ratio)."""
    sel_level = level + ell
    coarse = {key: w for key, w in nodes.items() if key[0] < level}
    fine = {key: w for key, w in nodes.items() if key[0] >= level}

    groups: dict[tuple[int, ...], list[tuple[int, tuple[int, ...], float]]] = {}
    for (t, idx) in sorted(fine):
        q = index_ancestor(idx, t - level)
        groups.setdefault(q, []).append((t, idx, fine[(t, idx)]))

    new_nodes = dict(coarse)
    pairs: dict[tuple[int, ...], tuple[int, ...]] = {}
    min_ratio = float("inf")
    for q in sorted(groups):
        members = groups[q]
        cands: dict[tuple[int, ...], float] = {}
        mid_owner: dict[tuple[int, ...], tuple[int, tuple[int, ...]]] = {}
        q_mass = 0.0
        for t, idx, w in members:
            q_mass += w
            if t >= sel_level:
                c = index_ancestor(idx, t - sel_level)
                cands[c] = cands.get(c, 0.0) + w
            else:
                # node coarser than the selection level: all its subcubes tie,
                # only the lexicographically first can win
                c = index_first_descendant(idx, sel_level - t)
                if c in cands:
                    raise VerificationError("antichain overlap while selecting subcubes", stage="sparsify")
                cands[c] = w * 2.0 ** (-n * (sel_level - t))
                mid_owner[c] = (t, idx)
        best_idx = sorted(cands.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
        best_mass = cands[best_idx]
        if q_mass > 0:
            min_ratio = min(min_ratio, best_mass * 2.0 ** (n * ell) / q_mass)
        factor = q_mass / best_mass
        pairs[q] = best_idx
        for t, idx, w in members:
            if t >= sel_level:
                if index_ancestor(idx, t - sel_level) == best_idx:
                    new_nodes[(t, idx)] = w * factor
            elif mid_owner.get(best_idx) == (t, idx):
                # uniform on the selected subcube, total mass preserved exactly
                new_nodes[(sel_level, best_idx)] = q_mass
    return new_nodes, bool(coarse), pairs, min_ratio


def build_sparse_construction(
    measure: CellMeasure,
    h: Gauge,
    k: int,
    ell: int,
) -> SparseConstruction:
    if ell < 1:
        raise InvalidInputError(f"ell must be >= 1, got {ell}")
    if k < 1:
        raise InvalidInputError(f"k must be >= 1, got {k}")
    original_total = measure.total
    if original_total <= 0:
        raise InvalidInputError("cannot sparsify the zero measure")
    normalized = abs(original_total - 1.0) > 1e-12
    base = measure.normalized() if normalized else measure
    n, depth = base.n, base.depth

    scales = certified_scales(h, k, n, ell, depth)
    # certified_scales raised if not even one scale fits

    nodes = {(base.cell_level, idx): m for idx, m in base.masses.items()}
    windows: list[tuple[int, int]] = []
    stages = [SparseMeasure(n, depth, dict(nodes), tuple(windows))]
    families: list[ScaleFamily] = []
    sel_ratios: list[float] = []
    for level in scales:
        nodes, window_added, pairs, min_ratio = _apply_scale(n, nodes, level, ell)
        if window_added:
            windows.append((level, ell))
        families.append(ScaleFamily(level, ell, pairs, pattern=window_added))
        sel_ratios.append(min_ratio if min_ratio != float("inf") else 1.0)
        stages.append(SparseMeasure(n, depth, dict(nodes), tuple(windows)))

    cert = SparsityCertificate(n, ell, tuple(scales), tuple(families))
    return SparseConstruction(
        base=base,
        h_label=h.label,
        k=k,
        ell=ell,
        stages=tuple(stages),
        certificate=cert,
        normalized=normalized,
        norm_constant=max(1.0, 1.0 / original_total),
        original_total=original_total,
        selection_ratios=tuple(sel_ratios),
    )


def build_sparse_measure(measure: CellMeasure, h: Gauge, k: int, ell: int):
    """Convenience wrapper: returns just (sparse measure, certificate).

    The measure is a plain CellMeasure whenever the construction stayed fully
    explicit, otherwise the lazy antichain form.
    """
    cons = build_sparse_construction(measure, h, k, ell)
    return cons.result_measure(), cons.certificate


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class SparseReport:
    passed: bool
    coarse_drift: float  # worst relative drift of cube masses at levels <= l_j
    cap_ratio_h: float  # max mass(Q) / (B * 2^(j n ell) h(diam Q))
    cap_ratio_k: float  # max mass(Q) / (B * C0 * diam(Q)^k)
    min_selection_ratio: float  # min mass(Q') * 2^(n ell) / mass(Q)
    c_zero_side: float  # C0: max of h(diam)/diam^k over the working grid
    norm_constant: float  # B
    rescale_constant: float  # B * C0; dividing masses by it yields mass <= diam^k
    total_drift: float
    support_nested: bool
    certificate_ok: bool


def _gauge_power_constant(h: Gauge, k: int, n: int, depth: int) -> float:
    root = sqrt(n)
    best = 1.0
    for l in range(depth + 1):
        d = root * 2.0 ** (-l)
        best = max(best, h(d) / d ** k)
    return best


def verify_sparse_construction(cons: SparseConstruction, h: Gauge, sample_cells: int = 256, seed: int = 0) -> SparseReport:
    """Check preservation, caps, selection bounds, and certificate consistency.

    Cubes containing antichain nodes are checked through exact rollups; cubes
    strictly inside a uniform node are covered in closed form, per node and
    level, because all surviving same-level cubes inside one node carry the
    same mass (the maximal chain value).  Together that covers every dyadic
    cube down to the declared depth.
    """
    n = cons.base.n
    depth = cons.base.depth
    ell = cons.ell
    cert = cons.certificate
    c0_side = _gauge_power_constant(h, cons.k, n, depth)
    B = cons.norm_constant
    root = sqrt(n)

    # coarse-mass preservation at levels <= l_j, stage against previous stage
    drift = 0.0
    for j, level in enumerate(cert.scales, start=1):
        prev, cur = cons.stages[j - 1], cons.stages[j]
        prev_roll = prev.ancestor_rollup(level)
        cur_roll = cur.ancestor_rollup(level)
        for key in sorted(set(prev_roll) | set(cur_roll)):
            a, b = prev_roll.get(key, 0.0), cur_roll.get(key, 0.0)
            denom = max(abs(a), abs(b), 1e-300)
            drift = max(drift, abs(a - b) / denom)
        for a, e in cur.windows:
            if a < level and (a, e) not in prev.windows:
                raise VerificationError("window appeared above the active scale", stage="sparsify")

    # caps: mass(Q) <= B * min(2^(j n ell) h(diam Q), C0 diam^k) for stage j
    ratio_h = 0.0
    ratio_k = 0.0
    for j, sm in enumerate(cons.stages):
        amp = 2.0 ** (n * ell * j)
        roll = sm.ancestor_rollup(depth)
        for (lvl, _idx), mass in sorted(roll.items()):
            d = root * 2.0 ** (-lvl)
            ratio_h = max(ratio_h, mass / (B * amp * h(d)))
            ratio_k = max(ratio_k, mass / (B * c0_side * d ** cons.k))
        for (t, idx) in sorted(sm.nodes):
            w = sm.nodes[(t, idx)]
            value = w
            free_chain = idx
            for lvl in range(t + 1, depth + 1):
                windowed = any(a >= t and a < lvl <= a + e for a, e in sm.windows)
                free_chain = tuple(2 * c for c in free_chain)
                if not windowed:
                    value *= 2.0 ** (-n)
                d = root * 2.0 ** (-lvl)
                ratio_h = max(ratio_h, value / (B * amp * h(d)))
                ratio_k = max(ratio_k, value / (B * c0_side * d ** cons.k))

    # support nesting: every node of stage j sits inside stage j-1's support
    nested = True
    for j in range(1, len(cons.stages)):
        prev = cons.stages[j - 1]
        by_level: dict[int, list[tuple[int, ...]]] = {}
        for (t, idx) in cons.stages[j].nodes:
            by_level.setdefault(t, []).append(idx)
        for t in sorted(by_level):
            occ = _occupancy(prev, t)
            for idx in sorted(by_level[t]):
                if not occ(idx):
                    nested = False

    # certificate consistency: nodes follow their recorded selections, and a
    # sampled set of support cells passes the public check
    cert_ok = True
    for (t, idx) in sorted(cons.result.nodes):
        for fam in cert.families:
            if fam.level + ell <= t:
                q = index_ancestor(idx, t - fam.level)
                sel = fam.selected(q)
                if sel is None or index_ancestor(idx, t - (fam.level + ell)) != sel:
                    cert_ok = False
    deepest = cert.scales[-1] + ell
    if deepest <= depth and sample_cells > 0:
        rng = np.random.default_rng(seed)
        sampled = cons.result.support_sample_cells(deepest, sample_cells, rng)
        if not check_sparse(sampled, cert):
            cert_ok = False

    total_drift = max(abs(sm.total - 1.0) for sm in cons.stages)
    min_sel = min(cons.selection_ratios) if cons.selection_ratios else 1.0
    passed = (
        drift <= PRESERVE_TOL
        and ratio_h <= 1.0 + CAP_TOL
        and ratio_k <= 1.0 + CAP_TOL
        and min_sel >= 1.0 - 1e-12  # best subcube never beaten by the cube average
        and total_drift <= 1e-9
        and nested
        and cert_ok
    )
    return SparseReport(
        passed=passed,
        coarse_drift=drift,
        cap_ratio_h=ratio_h,
        cap_ratio_k=ratio_k,
        min_selection_ratio=min_sel,
        c_zero_side=c0_side,
        norm_constant=B,
        rescale_constant=B * c0_side,
        total_drift=total_drift,
        support_nested=nested,
        certificate_ok=cert_ok,
    )


# ---------------------------------------------------------------------------
# holes


@dataclass(frozen=True)
class ScaleFamilyView:
    """Occupancy plus selection for one certified scale."""

    n: int
    level: int
    ell: int
    occupied: object  # callable: level-index tuple -> bool
    selected: object  # callable: level-index tuple -> index tuple | None


def scale_family_view(source, scale_index: int) -> ScaleFamilyView:
    """Build the view for scale `scale_index` (0-based) from a construction or
    from an explicit certificate (whose pairs enumerate the occupied cubes)."""
    if isinstance(source, SparseConstruction):
        cert = source.certificate
        level = cert.scales[scale_index]
        prev = source.stages[scale_index]
        fam = cert.families[scale_index]
        return ScaleFamilyView(source.base.n, level, cert.ell, _occupancy(prev, level), fam.selected)
    if isinstance(source, SparsityCertificate):
        fam = source.families[scale_index]
        if fam.pattern:
            raise InvalidInputError(
                "pattern certificates do not enumerate occupied cubes; pass the construction"
            )
        return ScaleFamilyView(source.n, fam.level, source.ell, lambda idx: tuple(idx) in fam.pairs, fam.selected)
    raise InvalidInputError(f"cannot build a family view from {type(source).__name__}")


def distance_to_family(view: ScaleFamilyView, y: np.ndarray) -> float:
    """Exact distance from y to the union of selected subcubes at this scale."""
    n = view.n
    level = view.level
    side = 2.0 ** (-level)
    scale = 1 << level
    radius = 2.0 * side
    cap = 4.0 * sqrt(n) + 4.0 * side
    best = float("inf")
    seen_radius = -1.0
    while True:
        lo = np.maximum(np.floor((y - radius) * scale).astype(int), 0)
        hi = np.minimum(np.floor((y + radius) * scale).astype(int), scale - 1)
        if np.all(lo <= hi):
            for idx in product(*[range(a, b + 1) for a, b in zip(lo, hi)]):
                box_lo = np.array(idx, dtype=float) * side
                gap = dist_point_to_box(y, box_lo, box_lo + side)
                if gap > radius or gap <= seen_radius:
                    continue  # outside this sweep, or already examined
                if not view.occupied(idx):
                    continue
                sel = view.selected(idx)
                if sel is None:
                    continue
                s_lo, s_hi = cube_bounds(level + view.ell, sel)
                best = min(best, dist_point_to_box(y, s_lo, s_hi))
        # every unexamined family cube is farther than `radius`
        if best <= radius or radius > cap:
            return best
        seen_radius = radius
        radius *= 2.0


@dataclass(frozen=True)
class HoleWitness:
    point: tuple[float, ...]
    clearance: float
    scale_level: int


def find_hole(
    source,
    scale_index: int,
    x,
    plane: AffinePlane,
    c_target: float,
    grid: int = 16,
) -> HoleWitness | None:
    """Search the k-plane section through x at one certified scale for a point
    at distance >= c_target * 2^-l_j from the union of selected subcubes.

    The grid covers (x + plane) intersected with the closed ball of radius
    2^-(l_j + 1) around x, at `grid` points per plane axis.  Returns the best
    point found when it clears the target, otherwise None.  An empty nearby
    family makes x itself a witness with infinite clearance.
    """
    if grid < 8:
        raise InvalidInputError(f"grid must be >= 8, got {grid}")
    view = scale_family_view(source, scale_index)
    x = np.asarray(x, dtype=float)
    if x.shape != (view.n,):
        raise InvalidInputError(f"x must have {view.n} coordinates")
    rho = 2.0 ** (-(view.level + 1))
    k = plane.frame.shape[0]
    axis = np.linspace(-rho, rho, grid)
    best_pt, best_clearance = None, -1.0
    for coeffs in product(axis, repeat=k):
        t = np.array(coeffs)
        if float(np.dot(t, t)) > rho * rho * (1.0 + 1e-12):
            continue
        y = x + t @ plane.frame
        d = distance_to_family(view, y)
        if d > best_clearance:
            best_clearance, best_pt = d, y
    threshold = c_target * 2.0 ** (-view.level)
    if best_pt is None or best_clearance < threshold:
        return None
    return HoleWitness(tuple(float(c) for c in best_pt), best_clearance, view.level)


@dataclass(frozen=True)
class C0Estimate:
    value: float
    trials: int
    grid: int
    ell: int
    n: int
    k: int
    below_threshold: bool  # ell smaller than the certified sparsity parameter


def estimate_c0(ell: int, n: int, k: int, trials: int = 2000, grid: int = 24, seed: int = 0) -> C0Estimate:
    """Empirical clearance constant at unit scale.

    Each trial draws a center x in the unit cube, a Haar k-frame, and one
    admissible obstacle family: a single level-ell subcube inside each of the
    3^n unit cubes around x.  Offsets cycle through independent placements,
    translation-correlated placements, and the all-zero corner pattern, so the
    lattice-like families emitted by the construction are represented.  The
    estimate is the worst best-clearance over all trials, achieved on a grid
    of `grid` points per plane axis inside the radius-1/2 ball.
    """
    if trials < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    if grid < 8:
        raise InvalidInputError(f"grid must be >= 8, got {grid}")
    if not 1 <= k < n:
        raise InvalidInputError(f"need 1 <= k < n, got k={k}, n={n}")
    if ell < 1:
        raise InvalidInputError(f"ell must be >= 1, got {ell}")
    rng = np.random.default_rng(seed)
    below = ell < min_sparsity_parameter(n, k, "ball-bound")
    sub = 2.0 ** (-ell)
    offsets = list(product((-1.0, 0.0, 1.0), repeat=n))
    axis = np.linspace(-0.5, 0.5, grid)
    worst = float("inf")
    for trial in range(trials):
        x = rng.random(n)
        frame = random_orthonormal_frame(rng, n, k)
        style = trial % 3
        if style == 0:
            subs = rng.integers(0, 1 << ell, size=(len(offsets), n)).astype(float)
        elif style == 1:
            subs = np.tile(rng.integers(0, 1 << ell, size=n).astype(float), (len(offsets), 1))
        else:
            subs = np.zeros((len(offsets), n))
        lows = np.array(offsets, dtype=float) + subs * sub
        highs = lows + sub
        best = -1.0
        for coeffs in product(axis, repeat=k):
            t = np.array(coeffs)
            if float(np.dot(t, t)) > 0.25 * (1.0 + 1e-12):
                continue
            y = x + t @ frame
            gaps = np.maximum(np.maximum(lows - y, y - highs), 0.0)
            d = float(np.sqrt((gaps * gaps).sum(axis=1)).min())
            best = max(best, d)
        worst = min(worst, best)
    return C0Estimate(worst, trials, grid, ell, n, k, below)


@dataclass(frozen=True)
class WitnessReport:
    passed: bool
    samples: int
    c0: float
    scale_levels: tuple[int, ...]
    min_clearance: dict  # scale level -> worst clearance in units of 2^-level
    failures: tuple[tuple[int, int], ...]  # (sample index, scale level)


def witness_unrectifiability(
    target,
    cert: SparsityCertificate | None,
    c0: float,
    samples: int = 100,
    seed: int = 0,
    grid: int = 24,
) -> WitnessReport:
    """Verify hole witnesses at every certified scale for sampled (x, plane) pairs.

    `target` supplies the points and the occupancy: a SparseConstruction
    (certificate optional, taken from it), or an explicit CellSet/CellMeasure
    together with a fully explicit certificate.
    """
    if c0 < 0:
        raise InvalidInputError(f"c0 must be nonnegative, got {c0}")
    if isinstance(target, SparseConstruction):
        cert = target.certificate
        source = target
        n = target.base.n
        k = target.k

        def draw(rng, count):
            return target.result.sample_support_points(rng, count)

    elif isinstance(target, (CellSet, CellMeasure)):
        if cert is None:
            raise InvalidInputError("an explicit certificate is required with a cell target")
        source = cert
        n = target.n
        # explicit-cell callers probe with lines; higher k needs a construction
        k = 1

        def draw(rng, count):
            return target.sample_points(rng, count)

    else:
        raise InvalidInputError(f"cannot witness on {type(target).__name__}")

    rng = np.random.default_rng(seed)
    jobs = []
    for i in range(samples):
        x = draw(rng, 1)[0]
        frame = random_orthonormal_frame(rng, n, k)
        jobs.append((i, x, AffinePlane(x, frame)))

    def run(job):
        i, x, plane = job
        out = []
        for s_idx, level in enumerate(cert.scales):
            witness = find_hole(source, s_idx, x, plane, c0, grid)
            out.append((level, witness))
        return i, out

    workers = thread_count()
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]

    failures: list[tuple[int, int]] = []
    min_clear: dict[int, float] = {}
    for i, per_scale in results:
        for level, witness in per_scale:
            if witness is None:
                failures.append((i, level))
                continue
            normalized = witness.clearance / 2.0 ** (-level)
            cur = min_clear.get(level)
            if cur is None or normalized < cur:
                min_clear[level] = normalized
    return WitnessReport(
        passed=not failures,
        samples=samples,
        c0=c0,
        scale_levels=tuple(cert.scales),
        min_clearance=min_clear,
        failures=tuple(failures),
    )

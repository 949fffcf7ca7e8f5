"""L2 flatness coefficients and their dyadic square functions.

beta2 measures, at a center and scale, the normalized L2 distance of a
measure to its best-fitting affine k-plane inside the ball.  The optimal
plane is a closed-form moment computation: it passes through the restricted
barycenter and is spanned by the top-k eigenvectors of the weighted second
moment matrix; the attained minimum is the sum of the n-k smallest
eigenvalues.  content_beta replaces the measure integral by a layer-cake of
Hausdorff contents of superlevel sets, which is not a quadratic form, so the
plane infimum is approximated by a direction grid with local refinement.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import log, sqrt

import numpy as np

from gmtkit.content import content
from gmtkit.errors import InvalidInputError
from gmtkit.frostman import CellMeasure
from gmtkit.gauge import power_exp_gauge
from gmtkit.lattice import CellSet
from gmtkit.sparsify import AffinePlane, random_orthonormal_frame

LN2 = log(2.0)


def _points_weights(source) -> tuple[np.ndarray, np.ndarray]:
    """Accept a CellMeasure, a (points, weights) pair, or bare points."""
    if isinstance(source, CellMeasure):
        return source.centers_and_weights()
    if isinstance(source, tuple) and len(source) == 2:
        pts = np.asarray(source[0], dtype=float)
        w = np.asarray(source[1], dtype=float)
    else:
        pts = np.asarray(source, dtype=float)
        w = np.ones(pts.shape[0], dtype=float)
    if pts.ndim != 2 or w.shape != (pts.shape[0],):
        raise InvalidInputError("points must be (m, n) with matching weights")
    if np.any(w < 0):
        raise InvalidInputError("weights must be nonnegative")
    return pts, w


def _restricted_moment_value(
    pts: np.ndarray, w: np.ndarray, x: np.ndarray, r: float, k: int
) -> tuple[np.ndarray, np.ndarray, float] | None:
    """Barycenter, top-k frame, and the attained minimum inside the closed ball.

    None when the ball carries no mass.
    """
    d2 = ((pts - x) ** 2).sum(axis=1)
    # closed ball, with slack for points placed at distance exactly r whose
    # computed distance carries one ulp of noise
    mask = d2 <= r * r * (1.0 + 1e-12)
    if not np.any(mask):
        return None
    p = pts[mask]
    ww = w[mask]
    total = float(ww.sum())
    if total <= 0.0:
        return None
    bary = (p * ww[:, None]).sum(axis=0) / total
    y = p - bary
    moment = (y * ww[:, None]).T @ y
    moment = 0.5 * (moment + moment.T)
    vals, vecs = np.linalg.eigh(moment)
    # PSD up to roundoff; tiny negative eigenvalues are noise
    vals = np.clip(vals, 0.0, None)
    n = pts.shape[1]
    value = float(vals[: n - k].sum())
    frame = vecs[:, n - k :].T
    return bary, frame, value


def best_affine_fit(source, x, r: float, k: int) -> tuple[AffinePlane, float]:
    """Optimal affine k-plane for the ball B_r(x) and the attained weighted
    sum of squared distances.  Raises on an empty ball."""
    pts, w = _points_weights(source)
    n = pts.shape[1]
    if not 1 <= k < n:
        raise InvalidInputError(f"need 1 <= k < n, got k={k}, n={n}")
    if r <= 0:
        raise InvalidInputError(f"radius must be positive, got {r}")
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise InvalidInputError(f"center must have {n} coordinates")
    got = _restricted_moment_value(pts, w, x, r, k)
    if got is None:
        raise InvalidInputError(f"no mass in the closed ball of radius {r}")
    bary, frame, value = got
    return AffinePlane(bary, frame), value


def beta2(source, x, r: float, k: int) -> float:
    """(r^(-k-2) * best fit value)^(1/2); zero on empty balls by convention."""
    try:
        _, value = best_affine_fit(source, x, r, k)
    except InvalidInputError as exc:
        if "no mass" in str(exc):
            return 0.0
        raise
    return sqrt(value * r ** (-(k + 2)))


@dataclass(frozen=True)
class BetaProfile:
    """Coefficients at dyadic scales r = 2^-j plus the ln2-weighted square sum."""

    center: tuple
    levels: tuple
    values: tuple
    total: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "levels", tuple(int(j) for j in self.levels))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.levels) != len(self.values):
            raise InvalidInputError("one value per level required")
        if any(v < 0 for v in self.values):
            raise InvalidInputError("coefficients must be nonnegative")
        check = 0.0
        for v in self.values:
            check += v * v * LN2
        if abs(check - self.total) > 1e-12 * max(1.0, abs(check)):
            raise InvalidInputError("square-function total does not match its terms")

    def pairs(self) -> list[tuple[float, float]]:
        return [(2.0 ** (-j), v) for j, v in zip(self.levels, self.values)]

    def to_json_obj(self) -> dict:
        return {
            "center": list(self.center),
            "levels": list(self.levels),
            "values": list(self.values),
            "square_sum": self.total,
        }

    def csv_rows(self) -> list[list]:
        center = list(self.center)
        return [center + [j, v] for j, v in zip(self.levels, self.values)]


def square_function(source, x, k: int, j_min: int, j_max: int) -> BetaProfile:
    """beta2 at r = 2^-j for j_min <= j <= j_max, summed with weight ln 2."""
    if j_min < 0 or j_max < j_min:
        raise InvalidInputError(f"need 0 <= j_min <= j_max, got {j_min}, {j_max}")
    pts, w = _points_weights(source)
    n = pts.shape[1]
    if not 1 <= k < n:
        raise InvalidInputError(f"need 1 <= k < n, got k={k}, n={n}")
    x = np.asarray(x, dtype=float)
    values = []
    total = 0.0
    for j in range(j_min, j_max + 1):
        r = 2.0 ** (-j)
        got = _restricted_moment_value(pts, w, x, r, k)
        beta = 0.0 if got is None else sqrt(got[2] * r ** (-(k + 2)))
        values.append(beta)
        total += beta * beta * LN2
    return BetaProfile(tuple(float(c) for c in x), tuple(range(j_min, j_max + 1)), tuple(values), total)


# ---------------------------------------------------------------------------
# content-based coefficient


def _orthonormalize(mat: np.ndarray) -> np.ndarray | None:
    q, r = np.linalg.qr(mat.T)
    if min(abs(np.diag(r))) < 1e-12:
        return None
    signs = np.where(np.diag(r) >= 0.0, 1.0, -1.0)
    return (q * signs).T


def _plane_distances(centers: np.ndarray, base: np.ndarray, frame: np.ndarray) -> np.ndarray:
    y = centers - base
    resid = y - (y @ frame.T) @ frame
    return np.sqrt((resid * resid).sum(axis=1))


def content_beta(
    cells: CellSet,
    x,
    r: float,
    k: int,
    plane_grid: int = 48,
    t_grid: int = 12,
    seed: int = 0,
) -> float:
    """Layer-cake flatness coefficient of a cell set inside B_r(x).

    For a candidate plane L the superlevel set at threshold t is the cells
    (represented by their centers) at distance > t from L; its size is the
    exact optimal dyadic cover cost under h(r) = r^k.  The t-integral of
    2 t * content runs over a geometric grid from r down to r*2^-t_grid,
    with an upper tail segment when some center sits farther than r from L.
    Planes pass through the barycenter of the selected centers; directions
    come from a grid with local refinement (angle golden-section for lines
    in the plane, seeded frame perturbation otherwise).
    """
    if r <= 0:
        raise InvalidInputError(f"radius must be positive, got {r}")
    if plane_grid < 4 or t_grid < 2:
        raise InvalidInputError("plane_grid >= 4 and t_grid >= 2 required")
    n = cells.n
    if not 1 <= k < n:
        raise InvalidInputError(f"need 1 <= k < n, got k={k}, n={n}")
    x = np.asarray(x, dtype=float)
    idx_list = cells.sorted_cells()
    if not idx_list:
        return 0.0
    side = 2.0 ** (-cells.depth)
    centers = (np.array(idx_list, dtype=float) + 0.5) * side
    mask = ((centers - x) ** 2).sum(axis=1) <= r * r
    if not np.any(mask):
        return 0.0
    centers = centers[mask]
    kept = [idx for idx, m in zip(idx_list, mask) if m]
    bary = centers.mean(axis=0)
    gauge = power_exp_gauge(k, 0.0)
    ts = [r * 2.0 ** (-i) for i in range(t_grid + 1)]

    content_cache: dict[frozenset, float] = {}

    def superlevel_content(dists: np.ndarray, t: float) -> float:
        chosen = frozenset(idx for idx, d in zip(kept, dists) if d > t)
        if not chosen:
            return 0.0
        got = content_cache.get(chosen)
        if got is None:
            got = content(CellSet(n, cells.depth, chosen), gauge)
            content_cache[chosen] = got
        return got

    def plane_value(frame: np.ndarray) -> float:
        dists = _plane_distances(centers, bary, frame)
        acc = 0.0
        top = float(dists.max())
        if top > ts[0]:
            acc += superlevel_content(dists, ts[0]) * (top * top - ts[0] * ts[0])
        for hi, lo in zip(ts, ts[1:]):
            phi = superlevel_content(dists, lo)
            if phi:
                acc += phi * (hi * hi - lo * lo)
        return acc * r ** (-(k + 2))

    if n == 2 and k == 1:
        def angle_value(theta: float) -> float:
            return plane_value(np.array([[np.cos(theta), np.sin(theta)]]))

        step = np.pi / plane_grid
        grid_vals = [(angle_value(i * step), i * step) for i in range(plane_grid)]
        best_val, best_theta = min(grid_vals)
        # golden-section inside the bracketing window; the objective is
        # piecewise constant in the angle, so this settles on a plateau
        lo, hi = best_theta - step, best_theta + step
        invphi = (sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc, fd = angle_value(c), angle_value(d)
        for _ in range(40):
            if fc <= fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = angle_value(c)
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = angle_value(d)
        best_val = min(best_val, fc, fd)
        return sqrt(max(best_val, 0.0))

    rng = np.random.default_rng(seed)
    frames = []
    for axes in combinations(range(n), k):
        f = np.zeros((k, n))
        for row, ax in enumerate(axes):
            f[row, ax] = 1.0
        frames.append(f)
    while len(frames) < plane_grid:
        frames.append(random_orthonormal_frame(rng, n, k))
    best_val, best_frame = min((plane_value(f), i) for i, f in enumerate(frames))
    best_frame = frames[best_frame]
    for sigma in (0.3, 0.1, 0.03, 0.01):
        for _ in range(max(4, plane_grid // 4)):
            cand = _orthonormalize(best_frame + sigma * rng.standard_normal(best_frame.shape))
            if cand is None:
                continue
            val = plane_value(cand)
            if val < best_val:
                best_val, best_frame = val, cand
    return sqrt(max(best_val, 0.0))

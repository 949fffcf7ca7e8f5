import math

import numpy as np
import pytest

from gmtkit.carleson import (
    ball_pair,
    empty_pair,
    epsilon_n,
    epsilon_report,
    epsilon_square_function,
    halfspace_pair,
    pair_from_json,
    polygon_pair,
    slab_complement_pair,
    sphere_points,
    unit_sphere_area,
)
from gmtkit.errors import InvalidInputError

TWO_PI = 2.0 * math.pi


def test_unit_sphere_area_values():
    assert unit_sphere_area(2) == pytest.approx(TWO_PI, rel=1e-15)
    assert unit_sphere_area(3) == pytest.approx(4.0 * math.pi, rel=1e-15)
    assert unit_sphere_area(4) == pytest.approx(2.0 * math.pi**2, rel=1e-15)


def test_sphere_points_are_unit_and_deterministic():
    for dim in (2, 3, 4, 5):
        pts = sphere_points(dim, 600)
        assert pts.shape == (600, dim)
        norms = np.sqrt((pts * pts).sum(axis=1))
        assert np.abs(norms - 1.0).max() < 1e-12
        again = sphere_points(dim, 600)
        assert np.array_equal(pts, again)
    # equidistribution sanity: mean close to zero
    pts = sphere_points(3, 20_000)
    assert np.abs(pts.mean(axis=0)).max() < 0.02


def test_halfspace_deficiency_vanishes():
    dp = halfspace_pair([0.0, 1.0], [0.3, 0.3])
    rep = epsilon_report(dp, [0.3, 0.3], 0.2, sphere_samples=100_000, seed=0)
    assert rep.value < 1e-3
    assert rep.radius == 0.2
    assert rep.sphere_samples == 100_000


def test_round_minima_never_increase():
    dp = ball_pair([0.5, 0.5], 0.4)
    rep = epsilon_report(dp, [0.5, 0.9], 0.1, sphere_samples=20_000, rounds=8, seed=1)
    for a, b in zip(rep.round_minima, rep.round_minima[1:]):
        assert b <= a
    assert rep.value == rep.round_minima[-1]
    assert len(rep.round_minima) == 9


def test_more_rounds_extend_the_same_search():
    dp = halfspace_pair([0.6, 0.8], [0.2, 0.1])
    short = epsilon_report(dp, [0.2, 0.1], 0.3, sphere_samples=8192, rounds=3, seed=4)
    long = epsilon_report(dp, [0.2, 0.1], 0.3, sphere_samples=8192, rounds=12, seed=4)
    assert short.round_minima == long.round_minima[: len(short.round_minima)]
    assert long.value <= short.value


def test_empty_pair_saturates():
    dp = empty_pair(2)
    rep = epsilon_report(dp, [0.5, 0.5], 0.25, sphere_samples=4096, seed=0)
    assert rep.value == TWO_PI
    assert all(v == TWO_PI for v in rep.round_minima)


def test_tilted_halfspace_bounded_by_angle():
    # plane through x tilted by theta from the tested normal family:
    # the best halfspace normal misses only the two theta-wedges
    for theta in (0.2, 0.05):
        normal = [math.sin(theta), math.cos(theta)]
        dp = halfspace_pair(normal, [0.5, 0.5])
        coarse = epsilon_report(dp, [0.5, 0.5], 0.1, normals=8, sphere_samples=50_000, rounds=0, seed=2)
        refined = epsilon_report(dp, [0.5, 0.5], 0.1, normals=8, sphere_samples=50_000, rounds=10, seed=2)
        assert refined.value <= coarse.value
        assert refined.value <= theta * 1.1


def test_enlarging_the_pair_shrinks_epsilon():
    # halfspace = slab complement with gap 0: growing the omitted slab can
    # only add misclassified directions
    x = [0.5, 0.5]
    shared = dict(sphere_samples=30_000, normals=32, rounds=6, seed=3)
    base = epsilon_n(halfspace_pair([0.0, 1.0], x), x, 0.2, **shared)
    thin = epsilon_n(slab_complement_pair([0.0, 1.0], x, 0.02), x, 0.2, **shared)
    thick = epsilon_n(slab_complement_pair([0.0, 1.0], x, 0.08), x, 0.2, **shared)
    assert base <= thin + 1e-12
    assert thin <= thick + 1e-12
    assert thick > 0.1  # a fat missing slab is genuinely visible


def test_ball_profile_decays_linearly():
    # near a circle boundary point the deficiency scales like r
    dp = ball_pair([0.5, 0.5], 0.25)
    prof = epsilon_square_function(
        dp, [0.5, 0.75], 1, 8, normals=48, sphere_samples=40_000, rounds=10, seed=0
    )
    vals = prof.values
    for j, v in enumerate(vals[:-1], start=prof.levels[0]):
        if j >= 3:
            assert vals[j - prof.levels[0] + 1] <= 0.7 * v
    # ratio to r settles near the inverse curvature radius 1/0.25 = 4
    ratios = [v / 2.0 ** (-j) for j, v in zip(prof.levels, vals) if j >= 3]
    assert 3.9 < min(ratios) <= max(ratios) < 4.3


def test_empty_profile_is_flat_and_total_additive():
    dp = empty_pair(2)
    prof = epsilon_square_function(dp, [0.5, 0.5], 2, 6, sphere_samples=512, rounds=1)
    assert all(v == TWO_PI for v in prof.values)
    assert prof.total == pytest.approx(5 * TWO_PI**2 * math.log(2), rel=1e-12)
    assert prof.pairs()[0] == (0.25, TWO_PI)


def test_halfspace_profile_sums_to_nothing():
    dp = halfspace_pair([1.0, 0.0], [0.5, 0.5])
    prof = epsilon_square_function(dp, [0.5, 0.5], 2, 8, sphere_samples=20_000, rounds=8, seed=0)
    assert prof.total < 1e-6


def test_polygon_pair_classification():
    dp = polygon_pair([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    labels = dp.classify(np.array([[0.5, 0.5], [2.0, 0.5], [0.5, -3.0]]))
    assert labels[0] == 1
    assert labels[1] == -1
    assert labels[2] == -1
    # a unit square looks locally like a halfspace at an edge midpoint
    rep = epsilon_report(dp, [0.5, 0.0], 0.05, sphere_samples=50_000, seed=0)
    assert rep.value < 1e-3


def test_pair_from_json_kinds():
    specs = [
        {"kind": "halfspace", "normal": [0.0, 1.0], "point": [0.5, 0.5]},
        {"kind": "slab-complement", "normal": [0.0, 1.0], "point": [0.5, 0.5], "gap": 0.1},
        {"kind": "ball", "center": [0.5, 0.5], "radius": 0.25},
        {"kind": "empty", "dim": 2},
        {"kind": "polygon", "vertices": [[0, 0], [1, 0], [0.5, 1]]},
    ]
    for spec in specs:
        dp = pair_from_json(spec)
        assert dp.dim == 2
        labels = dp.classify(np.array([[0.51, 0.52], [9.0, 9.0]]))
        assert set(np.unique(labels)).issubset({-1, 0, 1})
    with pytest.raises(InvalidInputError):
        pair_from_json({"kind": "mystery"})
    with pytest.raises(InvalidInputError):
        pair_from_json({"kind": "ball", "center": [0.5, 0.5], "radius": -1.0})


def test_epsilon_report_validates():
    dp = halfspace_pair([0.0, 1.0], [0.5, 0.5])
    with pytest.raises(InvalidInputError):
        epsilon_report(dp, [0.5, 0.5], 0.0)
    with pytest.raises(InvalidInputError):
        epsilon_report(dp, [0.5, 0.5], 0.1, normals=1)
    with pytest.raises(InvalidInputError):
        epsilon_report(dp, [0.5, 0.5], 0.1, sphere_samples=4)
    with pytest.raises(InvalidInputError):
        epsilon_report(dp, [0.5], 0.1)
    with pytest.raises(InvalidInputError):
        epsilon_square_function(dp, [0.5, 0.5], 4, 2)


def test_three_dimensional_halfspace():
    dp = halfspace_pair([0.0, 0.0, 1.0], [0.5, 0.5, 0.5])
    rep = epsilon_report(dp, [0.5, 0.5, 0.5], 0.2, sphere_samples=60_000, rounds=12, seed=0)
    assert rep.value < 0.02 * unit_sphere_area(3)

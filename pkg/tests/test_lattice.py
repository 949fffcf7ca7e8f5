import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gmtkit.errors import InvalidInputError
from gmtkit.lattice import (
    CellSet,
    DyadicCube,
    children,
    cube_at,
    descendants,
    union,
)


def test_cube_at_floors_coordinates():
    assert cube_at((0.3, 0.7), 1).index == (0, 1)
    assert cube_at((0.0, 0.0), 0).index == (0, 0)
    assert cube_at((0.26, 0.51), 2).index == (1, 2)


def test_cube_at_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        cube_at((1.0, 0.5), 1)
    with pytest.raises(InvalidInputError):
        cube_at((-0.1, 0.5), 1)
    with pytest.raises(InvalidInputError):
        cube_at((0.5, 0.5), -1)


def test_children_of_root():
    got = {c.index for c in children(DyadicCube(2, 0, (0, 0)))}
    assert got == {(0, 0), (1, 0), (0, 1), (1, 1)}
    assert len(children(DyadicCube(3, 0, (0, 0, 0)))) == 8


def test_children_compose_to_descendants():
    root = DyadicCube(2, 0, (0, 0))
    two_steps = {g.index for c in children(root) for g in children(c)}
    direct = {d.index for d in descendants(root, 2)}
    assert two_steps == direct
    assert len(direct) == 16


def test_descendants_identity_and_count():
    c = DyadicCube(2, 1, (1, 0))
    assert descendants(c, 0) == [c]
    assert len(descendants(c, 2)) == 16


def test_descendants_cover_parent_pointwise():
    c = DyadicCube(2, 1, (1, 0))
    rng = np.random.default_rng(0)
    lo, hi = c.lower(), c.upper()
    pts = lo + rng.random((10_000, 2)) * (hi - lo)
    ds = descendants(c, 2)
    for p in pts:
        assert sum(d.contains_point(p) for d in ds) == 1


def test_diameter_values():
    assert DyadicCube(2, 0, (0, 0)).diameter() == pytest.approx(np.sqrt(2), rel=1e-15)
    assert DyadicCube(2, 3, (0, 0)).diameter() == pytest.approx(np.sqrt(2) / 8, rel=1e-15)
    assert DyadicCube(4, 1, (0, 0, 0, 0)).diameter() == 1.0


def test_half_open_disjointness_on_boundary():
    cubes = descendants(DyadicCube(1, 0, (0,)), 1)
    containing = [c for c in cubes if c.contains_point(np.array([0.5]))]
    assert len(containing) == 1
    assert containing[0].index == (1,)


@given(
    st.integers(min_value=1, max_value=3),
    st.integers(min_value=0, max_value=8),
    st.randoms(use_true_random=False),
)
def test_parent_of_child_roundtrip(n, level, rnd):
    idx = tuple(rnd.randrange(2**level) for _ in range(n))
    c = DyadicCube(n, level, idx)
    for child in children(c):
        assert child.parent() == c


@given(
    st.lists(st.floats(min_value=0.0, max_value=0.999999), min_size=2, max_size=2),
    st.integers(min_value=0, max_value=30),
)
def test_cube_at_contains_its_point(coords, level):
    p = np.array(coords)
    assert cube_at(p, level).contains_point(p)


@given(st.integers(min_value=0, max_value=2), st.integers(min_value=0, max_value=2))
def test_descendants_compose(a, b):
    c = DyadicCube(2, 1, (0, 1))
    direct = {d.index for d in descendants(c, a + b)}
    stepped = {g.index for d in descendants(c, a) for g in descendants(d, b)}
    assert direct == stepped


def test_cellset_roundtrip_is_byte_stable(tmp_path):
    cs = CellSet(2, 2, frozenset({(3, 1), (0, 0), (2, 2)}))
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    cs.save(p1)
    CellSet.load(p1).save(p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert CellSet.load(p2) == cs


def test_cellset_json_is_sorted(tmp_path):
    cs = CellSet(2, 1, frozenset({(1, 1), (0, 0), (1, 0)}))
    path = tmp_path / "cells.json"
    cs.save(path)
    text = path.read_text()
    assert text.index("[0,0]") < text.index("[1,0]") < text.index("[1,1]")


def test_cellset_validates_indices():
    with pytest.raises(InvalidInputError):
        CellSet(2, 1, frozenset({(2, 0)}))
    with pytest.raises(InvalidInputError):
        CellSet(2, 1, frozenset({(0,)}))


def test_cellset_refined_and_ancestors():
    cs = CellSet(2, 1, frozenset({(0, 1)}))
    fine = cs.refined(3)
    assert fine.depth == 3
    assert len(fine.cells) == 16
    anc = cs.occupied_ancestors(0)
    assert anc == {(0, 0)}


def test_union_merges_cellsets():
    a = CellSet(2, 1, frozenset({(0, 0)}))
    b = CellSet(2, 2, frozenset({(3, 3)}))
    u = union([a, b])
    assert u.depth == 2
    assert (3, 3) in u.cells and (0, 0) in u.cells and (1, 1) in u.cells
    with pytest.raises(InvalidInputError):
        union([])


def test_sample_points_land_in_cells():
    cs = CellSet(2, 3, frozenset({(0, 0), (7, 7)}))
    pts = cs.sample_points(np.random.default_rng(0), 64)
    for p in pts:
        assert tuple(int(c * 8) for c in p) in cs.cells

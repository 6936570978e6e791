from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hullpeel.geometry import (
    AffineMap,
    affine_apply,
    as_float_array,
    convex_hull,
    hull_boundary_2d,
    is_exact,
    lower_hull,
    orient2d,
    read_points_csv,
    to_exact,
    write_points_csv,
)

coords = st.floats(min_value=-8, max_value=8, allow_nan=False, allow_infinity=False)


def test_orientation_pinned_cases():
    assert orient2d(0, 0, 1, 0, 0, 1) == 1
    assert orient2d(0, 0, 1, 1, 2, 2) == 0
    assert orient2d(0, 0, 0, 1, 1, 0) == -1


def test_orientation_exact_on_fractions():
    a = Fraction(1, 3)
    assert orient2d(0, 0, 1, a, 2, 2 * a) == 0
    assert orient2d(0, 0, 1, a, 2, 2 * a + Fraction(1, 10**30)) == 1


@given(
    ax=coords, ay=coords, bx=coords, by=coords, cx=coords, cy=coords
)
def test_orientation_antisymmetry(ax, ay, bx, by, cx, cy):
    assert orient2d(ax, ay, bx, by, cx, cy) == -orient2d(ax, ay, cx, cy, bx, by)


def test_orientation_near_degenerate_matches_exact():
    rng = np.random.default_rng(7)
    for _ in range(200):
        base = rng.uniform(-1, 1, size=2)
        step = rng.uniform(-1, 1, size=2)
        t = rng.uniform(0, 2)
        a = base
        b = base + step
        c = base + t * step + rng.choice([-1e-17, 0.0, 1e-17])
        got = orient2d(a[0], a[1], b[0], b[1], c[0], c[1])
        ea, eb, ec = to_exact([a, b, c])
        want = orient2d(ea[0], ea[1], eb[0], eb[1], ec[0], ec[1])
        assert got == want


def test_hull_square_with_center():
    pts = [(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5)]
    verts, facets = convex_hull(pts)
    assert sorted(verts) == [0, 1, 2, 3]
    assert len(facets) == 4


def test_hull_collinear_cloud_returns_extremes():
    verts, facets = convex_hull([(0, 0), (1, 0), (2, 0)])
    assert sorted(verts) == [0, 2]
    assert facets == []


def test_hull_single_and_empty():
    verts, facets = convex_hull([(3, 4)])
    assert verts == [0]
    assert facets == []
    with pytest.raises(ValueError):
        convex_hull([])


def test_hull_vertices_are_ccw():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, size=(40, 2))
    verts, _ = convex_hull(pts)
    k = len(verts)
    for t in range(k):
        a, b, c = pts[verts[t]], pts[verts[(t + 1) % k]], pts[verts[(t + 2) % k]]
        assert orient2d(a[0], a[1], b[0], b[1], c[0], c[1]) == 1


def _support_gap(pts, facet):
    vals = [
        sum(n * x for n, x in zip(facet.outward_normal, p)) - facet.offset
        for p in pts
    ]
    return max(vals)


def test_hull_facets_support_uniform_ball_cloud():
    # every facet must support the cloud: no point strictly outside
    rng = np.random.default_rng(42)
    angles = rng.uniform(0, 2 * np.pi, 100)
    radii = np.sqrt(rng.uniform(0, 1, 100))
    pts = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    verts, facets = convex_hull(pts)
    assert len(facets) == len(verts)
    for f in facets:
        assert _support_gap(pts, f) <= 1e-12
        touched = [
            i
            for i, p in enumerate(pts)
            if abs(sum(n * x for n, x in zip(f.outward_normal, p)) - f.offset) <= 1e-12
        ]
        assert set(f.vertex_indices) <= set(touched)


def test_hull_idempotence():
    rng = np.random.default_rng(5)
    pts = rng.normal(size=(60, 2))
    verts, _ = convex_hull(pts)
    again, _ = convex_hull(pts[verts])
    assert sorted(again) == list(range(len(verts)))


def test_boundary_includes_edge_points():
    pts = [(0, 0), (2, 0), (2, 2), (0, 2), (1, 0), (1, 1)]
    verts, _ = convex_hull(pts)
    assert sorted(verts) == [0, 1, 2, 3]
    assert hull_boundary_2d(pts) == [0, 1, 2, 3, 4]


def test_boundary_keeps_duplicate_corner():
    pts = [(0, 0), (1, 0), (0, 1), (0, 0)]
    assert hull_boundary_2d(pts) == [0, 1, 2, 3]


def test_lower_hull_tent():
    verts, facets = lower_hull([(0, 0), (1, 1), (2, 0)])
    assert sorted(verts) == [0, 2]
    assert len(facets) == 1
    assert facets[0].outward_normal[1] < 0


def test_lower_hull_valley_keeps_dip():
    verts, facets = lower_hull([(0, 0), (1, -1), (2, 0)])
    assert sorted(verts) == [0, 1, 2]
    assert len(facets) == 2
    assert all(f.outward_normal[1] < 0 for f in facets)


def test_hull_3d_cube_with_center():
    corners = [(x, y, z) for x in (0, 1) for y in (0, 1) for z in (0, 1)]
    pts = corners + [(0.5, 0.5, 0.5)]
    verts, facets = convex_hull(pts)
    assert sorted(verts) == list(range(8))
    assert len(facets) >= 6
    arr = as_float_array(pts)
    for f in facets:
        gaps = arr @ np.asarray(f.outward_normal) - f.offset
        assert gaps.max() <= 1e-9


def test_affine_map_validation():
    with pytest.raises(ValueError):
        AffineMap(((1, 2), (2, 4)), (0, 0))
    with pytest.raises(ValueError):
        AffineMap(((1, 0),), (0, 0))
    amap = AffineMap(((0, 1), (-1, 0)), (3, 0))
    assert amap.det_abs == 1
    assert amap.apply_point((1, 2)) == (5, -1)


def test_affine_inverse_roundtrip_exact():
    amap = AffineMap(
        ((Fraction(2), Fraction(1)), (Fraction(1), Fraction(1))),
        (Fraction(1, 3), Fraction(-2)),
    )
    inv = amap.inverse()
    p = (Fraction(5, 7), Fraction(11, 13))
    assert inv.apply_point(amap.apply_point(p)) == p


def test_affine_apply_matches_on_floats_and_fractions():
    amap = AffineMap(((2, 0), (1, 1)), (0, 1))
    arr = np.array([[1.0, 2.0], [0.25, -1.0]])
    out = affine_apply(amap, arr)
    assert np.allclose(out, [[2.0, 4.0], [0.5, 0.25]])
    exact = affine_apply(amap, to_exact(arr))
    assert as_float_array(exact).tolist() == out.tolist()


def test_to_exact_floats_are_exact():
    pts = [(0.1, 0.3), (1.5, -2.25)]
    ex = to_exact(pts)
    assert is_exact(ex)
    assert ex[1] == (Fraction(3, 2), Fraction(-9, 4))
    assert float(ex[0][0]) == 0.1


def test_as_float_array_rejects_bad_input():
    with pytest.raises(ValueError):
        as_float_array([1.0, 2.0])
    with pytest.raises(ValueError):
        as_float_array([(np.inf, 0.0)])


def test_points_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(9)
    pts = rng.normal(size=(25, 2))
    path = tmp_path / "pts.csv"
    write_points_csv(path, pts)
    text = path.read_text()
    assert text.startswith("x1,x2\n")
    assert "\r" not in text
    back = read_points_csv(path)
    assert np.array_equal(back, pts)


def test_points_csv_headerless(tmp_path):
    path = tmp_path / "raw.csv"
    path.write_text("0.5,1.5\n-2.0,3.0\n")
    back = read_points_csv(path)
    assert back.tolist() == [[0.5, 1.5], [-2.0, 3.0]]

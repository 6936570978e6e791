import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hullpeel.geometry import AffineMap, to_exact
from hullpeel.peeling import (
    check_affine_invariance,
    height,
    heights,
    layering_to_csv,
    max_depth,
    peel,
    verify_dpp,
)


@st.composite
def dyadic_clouds(draw, max_n=40, denom=64, span=4):
    seed = draw(st.integers(0, 2**31 - 1))
    n = draw(st.integers(1, max_n))
    rng = np.random.default_rng(seed)
    grid = rng.integers(-span * denom, span * denom + 1, size=(n, 2))
    return grid.astype(np.float64) / denom


def test_three_points_single_layer():
    lay = peel([(0, 0), (2, 0), (0, 2)])
    assert lay.num_layers == 1
    assert lay.layer_of_point.tolist() == [1, 1, 1]


def test_triangle_height_is_one_inside_zero_elsewhere():
    lay = peel([(0, 0), (2, 0), (0, 2)])
    assert height(lay, (0.5, 0.5)) == 1
    assert height(lay, (0, 0)) == 0
    assert height(lay, (1, 1)) == 0
    assert height(lay, (5, 5)) == 0


def test_square_with_center_two_layers():
    lay = peel([(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5)])
    assert lay.layer_of_point.tolist() == [1, 1, 1, 1, 2]
    assert lay.layer_counts().tolist() == [4, 1]
    assert height(lay, (0.5, 0.5)) == 1
    assert lay.hull_polygon(2).shape == (1, 2)


def test_collinear_cloud_single_layer():
    lay = peel([(0, 0), (1, 0), (2, 0), (3, 0)])
    assert lay.num_layers == 1
    assert max_depth(lay) == 1


def test_edge_points_peel_with_outer_layer():
    # boundary, not just corners: midpoints leave with the first hull
    pts = [(0, 0), (2, 0), (2, 2), (0, 2), (1, 0), (1, 1)]
    lay = peel(pts)
    assert lay.layer_of_point.tolist() == [1, 1, 1, 1, 1, 2]


def test_duplicates_share_a_layer():
    lay = peel([(0, 0), (1, 0), (0, 1), (0.25, 0.25), (0.25, 0.25)])
    assert lay.layer_of_point[3] == lay.layer_of_point[4] == 2


def test_peel_rejects_empty_cloud():
    with pytest.raises(ValueError):
        peel([])


def test_single_point_cloud():
    lay = peel([(1.5, -2.0)])
    assert lay.num_layers == 1
    assert verify_dpp([(0.0, 0.0)])


def test_cube_with_center_3d():
    corners = [(x, y, z) for x in (0, 1) for y in (0, 1) for z in (0, 1)]
    lay = peel(corners + [(0.5, 0.5, 0.5)])
    assert lay.layer_counts().tolist() == [8, 1]
    assert height(lay, (0.5, 0.5, 0.5)) == 1
    assert height(lay, (0, 0, 0)) == 0


@given(cloud=dyadic_clouds())
@settings(max_examples=60, deadline=None)
def test_depth_bound(cloud):
    lay = peel(cloud)
    n = len(np.unique(cloud, axis=0))
    assert lay.num_layers <= math.ceil(n / 3)


@given(cloud=dyadic_clouds())
@settings(max_examples=60, deadline=None)
def test_layers_partition_cloud(cloud):
    lay = peel(cloud)
    seen = np.concatenate(lay.layers)
    assert sorted(seen.tolist()) == list(range(len(cloud)))
    for n, members in enumerate(lay.layers, start=1):
        assert np.all(lay.layer_of_point[members] == n)


@given(cloud=dyadic_clouds())
@settings(max_examples=40, deadline=None)
def test_engines_agree(cloud):
    fast = peel(cloud, engine="fast")
    exact = peel(to_exact(cloud), engine="exact")
    assert fast.layer_of_point.tolist() == exact.layer_of_point.tolist()


@given(cloud=dyadic_clouds(max_n=24))
@settings(max_examples=30, deadline=None)
def test_dpp_identity_on_random_clouds(cloud):
    assert verify_dpp(cloud)


def test_cloud_points_have_boundary_height():
    rng = np.random.default_rng(3)
    cloud = rng.uniform(-1, 1, size=(200, 2))
    lay = peel(cloud)
    hs = heights(lay, cloud)
    assert np.array_equal(hs, lay.layer_of_point - 1)
    assert hs[0] == height(lay, cloud[0])


def test_nested_squares_heights():
    pts = []
    for k, s in enumerate([3.0, 2.0, 1.0]):
        pts += [(-s, -s), (s, -s), (s, s), (-s, s)]
    lay = peel(pts)
    assert lay.layer_counts().tolist() == [4, 4, 4]
    assert height(lay, (0.0, 0.0)) == 3
    assert height(lay, (0.0, 2.5)) == 1
    assert heights(lay, [(0, 0), (2.5, 0), (4, 4)]).tolist() == [3, 1, 0]


def test_monotonicity_of_height_under_subsets():
    rng = np.random.default_rng(11)
    cloud = rng.normal(size=(120, 2))
    sub = cloud[rng.choice(120, size=60, replace=False)]
    big = peel(cloud)
    small = peel(sub)
    queries = rng.normal(size=(80, 2))
    assert np.all(heights(small, queries) <= heights(big, queries))


def test_affine_invariance_exact_case():
    rng = np.random.default_rng(2)
    cloud = rng.integers(-20, 20, size=(30, 2)).astype(np.float64) / 4
    amap = AffineMap(((1, 2), (0, 1)), (3, -1))
    assert check_affine_invariance(cloud, amap)


def test_hull_polygons_shrink():
    rng = np.random.default_rng(8)
    cloud = rng.uniform(-1, 1, size=(300, 2))
    lay = peel(cloud)
    areas = []
    for n in range(1, lay.num_layers + 1):
        poly = lay.hull_polygon(n)
        if len(poly) < 3:
            break
        x, y = poly[:, 0], poly[:, 1]
        areas.append(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
    assert all(b < a for a, b in zip(areas, areas[1:]))


def test_verify_dpp_rejects_oversized_cloud():
    cloud = np.zeros((65, 2))
    with pytest.raises(ValueError):
        verify_dpp(cloud)
    assert verify_dpp([])


def test_layering_csv_format(tmp_path):
    lay = peel([(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5)])
    path = tmp_path / "layers.csv"
    layering_to_csv(lay, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "point_index,layer"
    assert lines[1] == "0,1"
    assert lines[5] == "4,2"


def test_deep_cloud_depth_window():
    # frozen window for the deepest layer of a 1e5-point uniform ball draw
    rng = np.random.default_rng(20260815)
    angles = rng.uniform(0, 2 * np.pi, 100000)
    radii = np.sqrt(rng.uniform(0, 1, 100000))
    cloud = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    lay = peel(cloud)
    assert 804 <= lay.num_layers <= 1257

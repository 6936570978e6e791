import xml.etree.ElementTree as ET

import numpy as np
import pytest

from hullpeel.peeling import peel
from hullpeel.render import layer_indices, layering_svg, write_svg

_NS = "{http://www.w3.org/2000/svg}"


def _nested_squares(levels: int) -> np.ndarray:
    pts = []
    for k in range(levels):
        s = float(levels - k)
        pts += [(-s, -s), (s, -s), (s, s), (-s, s)]
    return np.array(pts)


def test_layer_indices_default_caps_outline_count():
    assert layer_indices(3) == [1, 2, 3]
    assert layer_indices(10) == list(range(1, 11))
    assert len(layer_indices(97)) <= 10
    assert layer_indices(97)[0] == 1


def test_layer_indices_stride_and_validation():
    assert layer_indices(7, every=3) == [1, 4, 7]
    assert layer_indices(0) == []
    with pytest.raises(ValueError):
        layer_indices(5, every=0)


def test_svg_draws_requested_layers():
    lay = peel(_nested_squares(5))
    text = layering_svg(lay, every=2)
    root = ET.fromstring(text)
    polys = list(root.iter(f"{_NS}polygon"))
    assert [int(p.get("data-layer")) for p in polys] == [1, 3, 5]
    # outermost square has 4 corners
    assert len(polys[0].get("points").split()) == 4
    circles = list(root.iter(f"{_NS}circle"))
    assert len(circles) == 20


def test_svg_rejects_3d_clouds():
    cloud = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [0.2, 0.2, 0.2]])
    lay = peel(cloud)
    with pytest.raises(ValueError):
        layering_svg(lay)


def test_write_svg_roundtrip(tmp_path):
    lay = peel(_nested_squares(3))
    path = tmp_path / "out.svg"
    write_svg(path, lay)
    root = ET.fromstring(path.read_text())
    assert root.tag == f"{_NS}svg"
    assert int(root.get("width")) == 640

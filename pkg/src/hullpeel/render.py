"""SVG drawings of peeled clouds: nested outlines plus the points."""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET

import numpy as np

from .geometry import as_float_array
from .peeling import ConvexLayering


def layer_indices(num_layers: int, every: int | None = None) -> list[int]:
    """1-based layers to outline: every k-th, k defaulting to <= 10 outlines."""
    if num_layers < 1:
        return []
    if every is None:
        every = max(1, math.ceil(num_layers / 10))
    if every < 1:
        raise ValueError("stride must be positive")
    return list(range(1, num_layers + 1, every))


def _fmt(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".")


def layering_svg(
    layering: ConvexLayering,
    every: int | None = None,
    width: int = 640,
    point_radius: float | None = None,
) -> str:
    """Standalone SVG with the selected hull outlines over the cloud.

    Model y grows upward; the drawing flips it into screen coordinates.
    """
    pts = as_float_array(layering.points)
    if pts.shape[1] != 2:
        raise ValueError("SVG rendering supports d = 2")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    pad = 0.05 * float(span.max())
    lo, hi = lo - pad, hi + pad
    span = hi - lo
    height = int(round(width * span[1] / span[0]))
    sx = width / span[0]
    sy = height / span[1]

    def to_px(x: float, y: float) -> tuple[float, float]:
        return ((x - lo[0]) * sx, (hi[1] - y) * sy)

    svg = ET.Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "width": str(width),
            "height": str(height),
            "viewBox": f"0 0 {width} {height}",
        },
    )
    if point_radius is None:
        point_radius = max(0.75, 3.0 - math.log10(max(len(pts), 10)))
    dots = ET.SubElement(svg, "g", {"fill": "#444444", "stroke": "none"})
    for x, y in pts:
        px, py = to_px(float(x), float(y))
        ET.SubElement(
            dots,
            "circle",
            {"cx": _fmt(px), "cy": _fmt(py), "r": _fmt(point_radius)},
        )
    rings = ET.SubElement(
        svg,
        "g",
        {"fill": "none", "stroke": "#0a4d8c", "stroke-width": "1.2"},
    )
    for n in layer_indices(layering.num_layers, every):
        poly = layering.hull_polygon(n)
        coords = " ".join(
            "{},{}".format(*(map(_fmt, to_px(float(x), float(y)))))
            for x, y in poly
        )
        ET.SubElement(rings, "polygon", {"points": coords, "data-layer": str(n)})
    return ET.tostring(svg, encoding="unicode") + "\n"


def write_svg(path, layering: ConvexLayering, every: int | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(layering_svg(layering, every=every))

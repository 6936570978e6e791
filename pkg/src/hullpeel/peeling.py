"""Convex layers, the integer height function, and its defining properties.

Peeling repeatedly removes every point on the boundary of the hull of the
surviving cloud: corners and edge-interior points alike, because the next
hull is taken over the points strictly inside.  A point on the boundary of
the n-th hull has layer index n and height n - 1; the height of an arbitrary
location is the number of open hull interiors that contain it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _fast
from .geometry import (
    AffineMap,
    affine_apply,
    as_float_array,
    hull_boundary_2d,
    hull_vertices_2d,
    is_exact,
    orient2d,
    to_exact,
    _facets_2d,
)


@dataclass
class ConvexLayering:
    """Result of peeling: per-point layers plus per-layer hull geometry.

    layers[n-1] holds the indices on the boundary of the n-th hull; the
    polygon arrays hold the strict ccw corners of each hull for point
    location.  Exact-mode layerings carry Fraction polygon coordinates.
    """

    points: object
    dim: int
    layer_of_point: np.ndarray
    layers: list[np.ndarray]
    poly_x: np.ndarray
    poly_y: np.ndarray
    poly_off: np.ndarray
    exact: bool = False
    facet_planes: list | None = None  # d = 3: per-layer qhull equations

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def max_depth(self) -> int:
        return self.num_layers

    def layer_counts(self) -> np.ndarray:
        return np.array([len(l) for l in self.layers], dtype=np.int64)

    def hull_polygon(self, n: int) -> np.ndarray:
        """Strict ccw corner coordinates of the n-th hull (1-based)."""
        a, b = self.poly_off[n - 1], self.poly_off[n]
        return np.column_stack([self.poly_x[a:b], self.poly_y[a:b]])

    def hull_facets(self, n: int):
        """Supporting facets of the n-th hull in the stored float geometry."""
        poly = [tuple(p) for p in self.hull_polygon(n)]
        return _facets_2d(poly, list(range(len(poly))))


def _peel_sorted_unique(arr: np.ndarray):
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    xs = np.ascontiguousarray(arr[order, 0])
    ys = np.ascontiguousarray(arr[order, 1])
    layer_sorted, px, py, off, nlay = _fast.peel_layers(xs, ys)
    layer = np.empty(len(arr), dtype=np.int64)
    layer[order] = layer_sorted
    return layer, px, py, off, nlay


def peel(points, engine: str = "auto") -> ConvexLayering:
    """Peel a cloud into convex layers.

    engine 'fast' runs the compiled d = 2 kernel, 'exact' the rational
    engine; 'auto' picks by coordinate type.  d = 3 clouds use repeated
    qhull extraction (float only).
    """
    if engine == "auto":
        engine = "exact" if is_exact(points) else "fast"
    if engine == "exact":
        return _peel_exact(points)
    arr = as_float_array(points)
    n, d = arr.shape
    if d == 3:
        return _peel_3d(arr)
    if d != 2:
        raise ValueError("peel supports d = 2 or 3")
    uniq, inverse = np.unique(arr, axis=0, return_inverse=True)
    if len(uniq) == n:
        layer, px, py, off, nlay = _peel_sorted_unique(arr)
    else:
        layer_u, px, py, off, nlay = _peel_sorted_unique(uniq)
        layer = layer_u[inverse.reshape(-1)]
    layers = [np.flatnonzero(layer == k + 1) for k in range(nlay)]
    return ConvexLayering(arr, 2, layer, layers, px, py, off)


def _peel_exact(points) -> ConvexLayering:
    pts = to_exact(points)
    n = len(pts)
    if n == 0:
        raise ValueError("cannot peel an empty cloud")
    if len(pts[0]) != 2:
        raise ValueError("exact peeling supports d = 2 only")
    layer = np.zeros(n, dtype=np.int64)
    layers: list[np.ndarray] = []
    poly_x: list[Fraction] = []
    poly_y: list[Fraction] = []
    poly_off = [0]
    alive = list(range(n))
    while alive:
        bnd = hull_boundary_2d(pts, alive)
        corners = hull_vertices_2d(pts, alive)
        k = len(layers) + 1
        for i in bnd:
            layer[i] = k
        layers.append(np.asarray(bnd, dtype=np.int64))
        for i in corners:
            poly_x.append(pts[i][0])
            poly_y.append(pts[i][1])
        poly_off.append(len(poly_x))
        bnd_set = set(bnd)
        alive = [i for i in alive if i not in bnd_set]
    return ConvexLayering(
        pts,
        2,
        layer,
        layers,
        np.array(poly_x, dtype=object),
        np.array(poly_y, dtype=object),
        np.asarray(poly_off, dtype=np.int64),
        exact=True,
    )


def _peel_3d(arr: np.ndarray) -> ConvexLayering:
    from scipy.spatial import ConvexHull, QhullError

    n = len(arr)
    layer = np.zeros(n, dtype=np.int64)
    layers: list[np.ndarray] = []
    planes: list[np.ndarray] = []
    alive = np.arange(n)
    while len(alive):
        sub = arr[alive]
        try:
            hull = ConvexHull(sub)
        except (QhullError, ValueError):
            # affinely dependent remainder: flat hull, empty interior
            layers.append(alive.copy())
            layer[alive] = len(layers)
            planes.append(np.empty((0, 4)))
            break
        eq = hull.equations
        # boundary = points satisfying some facet equation with equality
        scale = np.abs(sub).max() + 1.0
        slack = sub @ eq[:, :3].T + eq[:, 3][None, :]
        on_b = (slack > -1e-12 * scale).any(axis=1)
        if not on_b.any():
            on_b[:] = True
        ids = alive[on_b]
        layers.append(ids)
        layer[ids] = len(layers)
        planes.append(eq.copy())
        alive = alive[~on_b]
    return ConvexLayering(
        arr,
        3,
        layer,
        layers,
        np.empty(0),
        np.empty(0),
        np.zeros(1, dtype=np.int64),
        facet_planes=planes,
    )


def _inside_strict_exact(layering: ConvexLayering, n: int, x) -> bool:
    a, b = layering.poly_off[n - 1], layering.poly_off[n]
    k = b - a
    if k < 3:
        return False
    for t in range(a, b):
        u = t + 1 if t + 1 < b else a
        if (
            orient2d(
                layering.poly_x[t],
                layering.poly_y[t],
                layering.poly_x[u],
                layering.poly_y[u],
                x[0],
                x[1],
            )
            <= 0
        ):
            return False
    return True


def height(layering: ConvexLayering, x) -> int:
    """Number of open hull interiors containing x (cloud points on the n-th
    boundary report n - 1)."""
    if layering.dim == 3:
        return _height_3d(layering, x)
    if layering.exact:
        xe = tuple(c if isinstance(c, Fraction) else Fraction(c) for c in x)
        lo, hi, best = 1, layering.num_layers, 0
        while lo <= hi:
            mid = (lo + hi) // 2
            if _inside_strict_exact(layering, mid, xe):
                best, lo = mid, mid + 1
            else:
                hi = mid - 1
        return best
    q = np.asarray([x], dtype=np.float64)
    return int(
        _fast.grid_heights(
            layering.poly_x, layering.poly_y, layering.poly_off, layering.num_layers, q[:, 0], q[:, 1]
        )[0]
    )


def _height_3d(layering: ConvexLayering, x) -> int:
    q = np.asarray(x, dtype=np.float64)
    best = 0
    for n in range(1, layering.num_layers + 1):
        eq = layering.facet_planes[n - 1]
        if len(eq) == 0:
            break
        if np.all(q @ eq[:, :3].T + eq[:, 3] < -1e-12):
            best = n
        else:
            break
    return best


def heights(layering: ConvexLayering, queries) -> np.ndarray:
    """Vectorized height query (d = 2 float layerings)."""
    if layering.exact or layering.dim != 2:
        return np.array([height(layering, q) for q in queries], dtype=np.int64)
    q = as_float_array(queries)
    return _fast.grid_heights(
        layering.poly_x, layering.poly_y, layering.poly_off, layering.num_layers, q[:, 0].copy(), q[:, 1].copy()
    )


def max_depth(layering: ConvexLayering) -> int:
    """Deepest layer index, equal to the maximum height plus one."""
    return layering.max_depth()


def layer_counts(layering: ConvexLayering) -> np.ndarray:
    """Number of cloud points on each layer, in layer order."""
    return layering.layer_counts()


@dataclass
class CheckResult:
    """Boolean verdict plus the first counterexample found, if any."""

    ok: bool
    counterexample: dict | None = None

    def __bool__(self) -> bool:
        return self.ok


_DY_BITS = 1024.0  # dyadic grid guard: coords k/1024 with |x| <= 8 keep every
#                    sweep determinant exact in float64


def _is_small_dyadic(arr: np.ndarray) -> bool:
    if np.abs(arr).max(initial=0.0) > 8.0:
        return False
    scaled = arr * _DY_BITS
    return bool(np.all(scaled == np.round(scaled)))


def verify_dpp(points, bound: int = 64) -> CheckResult:
    """Check the inf-sup identity for the height function at every cloud point.

    For each x the game value inf over directions p of sup {1 + h(y) :
    p.(y-x) > 0} (empty sup = 0) must equal h(x).  The infimum over all
    nonzero p is attained on the finite set of directions orthogonal to some
    y - x: crossing such a critical direction only shrinks the open
    half-space, so each open arc of directions is dominated by its endpoint.
    """
    if len(points) == 0:
        return CheckResult(True)
    arr = as_float_array(points)
    n, d = arr.shape
    if d != 2:
        raise ValueError("verify_dpp supports d = 2")
    if n > bound:
        raise ValueError(f"cloud size {n} exceeds bound {bound}")
    lay = peel(arr)
    h = lay.layer_of_point - 1
    dyadic = _is_small_dyadic(arr)
    for i in range(n):
        diffs = arr - arr[i]
        mask = np.any(diffs != 0, axis=1)
        others = np.flatnonzero(mask)
        if len(others) == 0:
            if h[i] != 0:
                return CheckResult(False, {"point": i, "reason": "isolated point with h > 0"})
            continue
        dv = diffs[others]
        normals = np.concatenate([np.column_stack([-dv[:, 1], dv[:, 0]]), np.column_stack([dv[:, 1], -dv[:, 0]])])
        if dyadic:
            side = normals @ dv.T  # (cands, others); each product exact in float64
        else:
            side = np.empty((len(normals), len(dv)))
            for a, c in enumerate(normals):
                cx, cy = Fraction(c[0]), Fraction(c[1])
                for b, v in enumerate(dv):
                    s = cx * Fraction(v[0]) + cy * Fraction(v[1])
                    side[a, b] = 1.0 if s > 0 else (-1.0 if s < 0 else 0.0)
        vals = np.where(side > 0, 1 + h[others][None, :], 0).max(axis=1)
        game = int(vals.min())
        if game != h[i]:
            return CheckResult(
                False,
                {"point": i, "x": arr[i].tolist(), "height": int(h[i]), "game_value": game},
            )
    return CheckResult(True)


def check_affine_invariance(points, amap: AffineMap) -> bool:
    """Layer indices are unchanged by a nonsingular affine map (exact mode)."""
    pts = to_exact(points)
    mapped = affine_apply(amap, pts)
    a = _peel_exact(pts)
    b = _peel_exact(mapped)
    return bool(np.array_equal(a.layer_of_point, b.layer_of_point))


def layering_to_csv(layering: ConvexLayering, path) -> None:
    """CSV rows (point_index, layer)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point_index", "layer"])
        for i, k in enumerate(layering.layer_of_point):
            w.writerow([i, int(k)])

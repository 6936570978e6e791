"""Robust primitive geometry: orientation predicates, convex hulls, affine maps.

Two scalar modes run through this module.  Floating mode works on float64
coordinates and filters every orientation sign through a static error bound,
falling back to exact rational evaluation when the determinant is within
rounding distance of zero.  Exact-rational mode works on
``fractions.Fraction`` coordinates and decides every predicate without
rounding error.  Both modes share the same hull code paths, which dispatch on
the coordinate type.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from math import hypot
from typing import Sequence

import numpy as np

# Static filter for the 2x2 orientation determinant: if |det| exceeds this
# multiple of the summed term magnitudes, the float sign is certain.
_ORIENT2D_ERRBOUND = 3.3306690738754716e-16

ExactPoint = tuple[Fraction, ...]


def to_exact(points) -> list[ExactPoint]:
    """Convert a point sequence to Fraction tuples (exact for float input)."""
    out = []
    for p in points:
        out.append(tuple(c if isinstance(c, Fraction) else Fraction(c) for c in p))
    return out


def as_float_array(points) -> np.ndarray:
    """Convert a point sequence to an (n, d) float64 array."""
    if isinstance(points, np.ndarray) and points.dtype == np.float64:
        arr = points
    else:
        try:
            arr = np.array([[float(c) for c in p] for p in points], dtype=np.float64)
        except TypeError as exc:
            raise ValueError("point cloud must be a sequence of d-vectors") from exc
    if arr.ndim != 2:
        raise ValueError("point cloud must be a sequence of d-vectors")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr


def is_exact(points) -> bool:
    """True when the cloud carries Fraction coordinates."""
    if isinstance(points, np.ndarray):
        return False
    for p in points:
        for c in p:
            return isinstance(c, Fraction)
    return False


def _sign(v) -> int:
    if v > 0:
        return 1
    if v < 0:
        return -1
    return 0


def orient2d(ax, ay, bx, by, cx, cy) -> int:
    """Sign of the ccw orientation of (a, b, c); exact for any inputs.

    Float inputs go through the static filter first; an ambiguous result is
    recomputed with rationals, so the answer never depends on rounding.
    """
    if isinstance(ax, Fraction) or isinstance(bx, Fraction) or isinstance(cx, Fraction):
        return _sign((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))
    detl = (bx - ax) * (cy - ay)
    detr = (by - ay) * (cx - ax)
    det = detl - detr
    err = _ORIENT2D_ERRBOUND * (abs(detl) + abs(detr))
    if det > err:
        return 1
    if det < -err:
        return -1
    d = (Fraction(bx) - Fraction(ax)) * (Fraction(cy) - Fraction(ay)) - (
        Fraction(by) - Fraction(ay)
    ) * (Fraction(cx) - Fraction(ax))
    return _sign(d)


def orientation(simplex) -> int:
    """Sign of the determinant of the simplex edge matrix (d+1 points, dim d).

    +1 for positively oriented, 0 for degenerate, -1 otherwise.  d = 2 uses
    the filtered predicate; d = 3 is evaluated in exact rationals.
    """
    pts = list(simplex)
    d = len(pts[0])
    if len(pts) != d + 1:
        raise ValueError("orientation needs d+1 points of dimension d")
    for p in pts:
        if len(p) != d:
            raise ValueError("orientation needs d+1 points of dimension d")
    if d == 2:
        (ax, ay), (bx, by), (cx, cy) = pts
        return orient2d(ax, ay, bx, by, cx, cy)
    if d == 3:
        q = [tuple(Fraction(c) if not isinstance(c, Fraction) else c for c in p) for p in pts]
        e = [tuple(q[i + 1][j] - q[0][j] for j in range(3)) for i in range(3)]
        det = (
            e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1])
            - e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0])
            + e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0])
        )
        return _sign(det)
    raise ValueError("orientation supports d = 2 or 3")


@dataclass(frozen=True)
class HullFacet:
    """One facet of a convex hull: {x : x . normal <= offset} supports the cloud."""

    vertex_indices: tuple[int, ...]
    outward_normal: tuple
    offset: object

    def support_slack(self, point) -> object:
        """offset - point . normal; >= 0 for every cloud point."""
        return self.offset - sum(n * c for n, c in zip(self.outward_normal, point))


def _det(matrix):
    n = len(matrix)
    if n == 1:
        return matrix[0][0]
    if n == 2:
        return matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0]
    total = 0
    for j in range(n):
        minor = [row[:j] + row[j + 1 :] for row in matrix[1:]]
        term = matrix[0][j] * _det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


@dataclass(frozen=True)
class AffineMap:
    """x -> matrix @ x + offset with a nonsingular matrix."""

    matrix: tuple[tuple, ...]
    offset: tuple
    det_abs: object = field(init=False)

    def __post_init__(self):
        d = len(self.offset)
        if len(self.matrix) != d or any(len(r) != d for r in self.matrix):
            raise ValueError("matrix/offset dimension mismatch")
        det = _det([list(r) for r in self.matrix])
        if det == 0:
            raise ValueError("affine map matrix is singular")
        object.__setattr__(self, "det_abs", abs(det))

    @classmethod
    def from_arrays(cls, matrix, offset) -> "AffineMap":
        return cls(tuple(tuple(r) for r in matrix), tuple(offset))

    @classmethod
    def identity(cls, d: int) -> "AffineMap":
        return cls(tuple(tuple(1 if i == j else 0 for j in range(d)) for i in range(d)), (0,) * d)

    def apply_point(self, p):
        d = len(self.offset)
        return tuple(
            sum(self.matrix[i][j] * p[j] for j in range(d)) + self.offset[i] for i in range(d)
        )

    def inverse(self) -> "AffineMap":
        d = len(self.offset)
        if d != 2:
            m = np.linalg.inv(np.asarray(self.matrix, dtype=float))
            b = -m @ np.asarray(self.offset, dtype=float)
            return AffineMap.from_arrays(m, b)
        (a, b), (c, e) = self.matrix
        det = a * e - b * c
        inv = ((e / det, -b / det), (-c / det, a / det)) if isinstance(det, float) else (
            (Fraction(e, 1) / det, -Fraction(b, 1) / det),
            (-Fraction(c, 1) / det, Fraction(a, 1) / det),
        )
        off = tuple(
            -(inv[i][0] * self.offset[0] + inv[i][1] * self.offset[1]) for i in range(2)
        )
        return AffineMap(inv, off)


def affine_apply(amap: AffineMap, points):
    """Pointwise image of the cloud; exact when map and cloud are rational."""
    if isinstance(points, np.ndarray):
        m = np.asarray(amap.matrix, dtype=np.float64)
        b = np.asarray(amap.offset, dtype=np.float64)
        return points @ m.T + b
    return [amap.apply_point(p) for p in points]


def _lex_order(points) -> list[int]:
    return sorted(range(len(points)), key=lambda i: tuple(points[i]))


def _chain(points, order, keep_collinear: bool) -> tuple[list[int], list[int]]:
    """Lower and upper hull chains over pre-sorted indices.

    keep_collinear retains points lying on hull edges (used to delete whole
    layer boundaries); otherwise only strict corners survive.
    """
    def build(seq):
        out: list[int] = []
        for i in seq:
            while len(out) >= 2:
                o, a = points[out[-2]], points[out[-1]]
                s = orient2d(o[0], o[1], a[0], a[1], points[i][0], points[i][1])
                if s < 0 or (s == 0 and not keep_collinear):
                    out.pop()
                else:
                    break
            out.append(i)
        return out

    return build(order), build(order[::-1])


def _dedupe(points) -> tuple[list[int], dict[int, list[int]]]:
    """Representative indices for distinct coordinates, plus their groups."""
    seen: dict[tuple, int] = {}
    groups: dict[int, list[int]] = {}
    reps = []
    for i, p in enumerate(points):
        key = tuple(p)
        if key in seen:
            groups[seen[key]].append(i)
        else:
            seen[key] = i
            groups[i] = [i]
            reps.append(i)
    return reps, groups


def hull_vertices_2d(points, subset: Sequence[int] | None = None) -> list[int]:
    """Indices of the strict hull corners in ccw order (degenerate: extremes)."""
    idx = list(range(len(points))) if subset is None else list(subset)
    uniq: dict[tuple, int] = {}
    reps: list[int] = []
    for i in idx:
        k = tuple(points[i])
        if k not in uniq:
            uniq[k] = i
            reps.append(i)
    order = sorted(reps, key=lambda i: tuple(points[i]))
    if len(order) == 1:
        return order
    lo, up = _chain(points, order, keep_collinear=False)
    # dropping the shared endpoints yields the ccw cycle; a collinear cloud
    # collapses to its two lexicographic extremes
    return lo[:-1] + up[:-1]


def hull_boundary_2d(points, subset: Sequence[int] | None = None) -> list[int]:
    """Indices of every point on the hull boundary (corners, edge points, ties)."""
    idx = list(range(len(points))) if subset is None else list(subset)
    uniq: dict[tuple, list[int]] = {}
    for i in idx:
        uniq.setdefault(tuple(points[i]), []).append(i)
    reps = [members[0] for members in uniq.values()]
    order = sorted(reps, key=lambda i: tuple(points[i]))
    if len(order) <= 2:
        chosen = set(order)
    else:
        lo, up = _chain(points, order, keep_collinear=True)
        chosen = set(lo) | set(up)
    out = []
    for r in chosen:
        out.extend(uniq[tuple(points[r])])
    return sorted(out)


def _facets_2d(points, ccw: list[int]) -> list[HullFacet]:
    facets = []
    k = len(ccw)
    if k < 3:
        return facets
    exact = isinstance(points[ccw[0]][0], Fraction)
    for t in range(k):
        i, j = ccw[t], ccw[(t + 1) % k]
        tx = points[j][0] - points[i][0]
        ty = points[j][1] - points[i][1]
        nx, ny = ty, -tx
        if not exact:
            norm = hypot(float(nx), float(ny))
            nx, ny = float(nx) / norm, float(ny) / norm
        off = nx * points[i][0] + ny * points[i][1]
        facets.append(HullFacet((i, j), (nx, ny), off))
    return facets


def convex_hull(points):
    """Extreme points and supporting facets of the hull of the cloud.

    Returns (vertices, facets): vertices are indices of exactly the extreme
    points (ccw order in d = 2); degenerate clouds return the extreme points
    with an empty facet list.  d = 3 is float-only and delegates to qhull.
    """
    n = len(points)
    if n == 0:
        raise ValueError("convex hull of an empty cloud")
    d = len(points[0])
    if d == 2:
        ccw = hull_vertices_2d(points)
        return ccw, _facets_2d(points, ccw)
    if d == 3:
        return _convex_hull_3d(points)
    raise ValueError("convex_hull supports d = 2 or 3")


def _convex_hull_3d(points):
    from scipy.spatial import ConvexHull, QhullError

    arr = as_float_array(points)
    try:
        hull = ConvexHull(arr)
    except QhullError:
        return _degenerate_extremes(arr), []
    vertices = [int(v) for v in hull.vertices]
    facets = []
    for simplex, eq in zip(hull.simplices, hull.equations):
        normal = tuple(float(c) for c in eq[:3])
        facets.append(HullFacet(tuple(int(v) for v in simplex), normal, float(-eq[3])))
    return vertices, facets


def _degenerate_extremes(arr: np.ndarray) -> list[int]:
    # Affinely dependent cloud: project onto its span and take extremes there.
    c = arr.mean(axis=0)
    u, s, vt = np.linalg.svd(arr - c, full_matrices=False)
    rank = int(np.sum(s > 1e-12 * max(1.0, s[0] if len(s) else 0.0)))
    if rank == 0:
        return [0]
    proj = (arr - c) @ vt[:rank].T
    if rank == 1:
        return sorted({int(np.argmin(proj[:, 0])), int(np.argmax(proj[:, 0]))})
    pts2 = [tuple(row) for row in proj[:, :2]]
    return sorted(hull_vertices_2d(pts2))


def lower_hull(points):
    """Facets of convex_hull with outward normal pointing strictly downward.

    Returns (vertices, facets): the facets whose normal has negative last
    component, and the vertices incident to them.
    """
    verts, facets = convex_hull(points)
    d = len(points[0])
    low = [f for f in facets if f.outward_normal[d - 1] < 0]
    seen: list[int] = []
    for f in low:
        for v in f.vertex_indices:
            if v not in seen:
                seen.append(v)
    return seen, low


def write_points_csv(path, points, header: bool = True) -> None:
    """CSV with one point per row, '.' decimals, optional x1..xd header."""
    arr = as_float_array(points)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow([f"x{i + 1}" for i in range(arr.shape[1])])
        for row in arr:
            w.writerow([repr(float(c)) for c in row])


def read_points_csv(path) -> np.ndarray:
    """Read a point cloud written by write_points_csv (header optional)."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec:
                continue
            try:
                rows.append([float(c) for c in rec])
            except ValueError:
                if rows:
                    raise
                # header line
                continue
    if not rows:
        raise ValueError(f"no points in {path}")
    return np.asarray(rows, dtype=np.float64)

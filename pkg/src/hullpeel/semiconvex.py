"""Peeling the upper half-plane by downward parabolas.

The semiconvex hull of a cloud X in H = {x_d > 0} removes everything that a
translated open paraboloid region can cut off without touching X.  Under
the lift (x^d, x_d) -> (x^d, x_d + |x^d|^2/2) those regions become open
lower half-planes, so a semiconvex layer is exactly the set of cloud points
on the lower convex envelope of the lifted cloud, and repeated peeling is
repeated envelope removal.  The same lift sends the parabola-bounded domain
P to H and identifies convex peeling of upward-unbounded sets with
semiconvex peeling of their projections; finite pairs of sentinel points
flanking the cloud emulate the unbounded part for the correspondence check.

Boundary convention: a cloud point on a layer supports some parabola whose
region misses the rest of the cloud (equivalently, its lift supports a
non-vertical line).  Points stacked directly above the extreme abscissae
have no such support and peel later; inputs with tied abscissae are
rejected by the correspondence check, where the distinction matters.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _fast
from .geometry import as_float_array, is_exact, orient2d, to_exact
from .peeling import CheckResult, _is_small_dyadic, peel
from .sampling import poisson_rectangle, trial_rng


@dataclass(frozen=True)
class Parabola:
    """Open region apex - P cut off below a downward unit parabola."""

    apex: tuple

    def __post_init__(self):
        if not self.apex[-1] > 0:
            raise ValueError("apex must lie in the open upper half-space")

    def contains(self, x) -> bool:
        a = self.apex
        gap = a[-1] - x[-1]
        sq = sum((ai - xi) ** 2 for ai, xi in zip(a[:-1], x[:-1]))
        return gap > sq / 2


@dataclass(frozen=True)
class Cylinder:
    """Axis window Q_r = (-r, r)^{d-1} x (0, r); its top face holds the
    cell-problem query point r e_d."""

    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("cylinder size must be positive")

    def contains(self, x) -> bool:
        return 0 < x[-1] < self.r and all(abs(c) < self.r for c in x[:-1])


def _is_single_point(x) -> bool:
    try:
        iter(x[0])
    except TypeError:
        return True
    return False


def _lift_point(p, sign: int):
    head = tuple(p[:-1])
    if any(isinstance(c, Fraction) for c in p):
        sq = sum(Fraction(c) * Fraction(c) for c in head) / 2
        return head + (Fraction(p[-1]) + sign * sq,)
    sq = sum(float(c) * float(c) for c in head) / 2
    return head + (p[-1] + sign * sq,)


def _lift_cloud(x, sign: int):
    if _is_single_point(x):
        return _lift_point(tuple(x), sign)
    if is_exact(x):
        return [_lift_point(p, sign) for p in to_exact(x)]
    arr = as_float_array(x).copy()
    arr[:, -1] += sign * 0.5 * np.sum(arr[:, :-1] ** 2, axis=1)
    return arr


def lift(x):
    """Map the half-space H into the parabola domain P (adds |x^d|^2/2)."""
    return _lift_cloud(x, +1)


def project(x):
    """Inverse of lift: P back onto H (subtracts |x^d|^2/2)."""
    return _lift_cloud(x, -1)


@dataclass
class SemiconvexLayering:
    """Per-point semiconvex layers plus the stored lifted envelopes.

    env arrays hold the lower-envelope chains of the lifted survivors, one
    slice per layer, used for nested strictly-inside queries.
    """

    points: object
    layer_of_point: np.ndarray
    layers: list[np.ndarray]
    env_x: np.ndarray
    env_y: np.ndarray
    env_off: np.ndarray
    exact: bool = False

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def layer_counts(self) -> np.ndarray:
        return np.array([len(l) for l in self.layers], dtype=np.int64)


def _validate_h_cloud(heights) -> None:
    for v in heights:
        if not v > 0:
            raise ValueError("cloud must lie strictly inside the half-plane")


def semiconvex_peel(points, engine: str = "auto") -> SemiconvexLayering:
    """Peel a planar cloud in H into semiconvex layers."""
    if engine == "auto":
        engine = "exact" if is_exact(points) else "fast"
    if engine == "exact":
        return _semi_peel_exact(to_exact(points))
    arr = as_float_array(points)
    n, d = arr.shape
    if d != 2:
        raise ValueError("semiconvex peeling supports d = 2")
    _validate_h_cloud(arr[:, 1])
    uniq, inverse = np.unique(arr, axis=0, return_inverse=True)
    ux = np.ascontiguousarray(uniq[:, 0])
    uy = np.ascontiguousarray(uniq[:, 1] + 0.5 * uniq[:, 0] ** 2)
    layer_u, env_x, env_y, env_off, nlay, _ = _fast.semi_peel(ux, uy, 0.0, 0.0, False, False)
    layer = layer_u[inverse.reshape(-1)]  # kernel output is in sorted-unique order
    layers = [np.flatnonzero(layer == k + 1) for k in range(nlay)]
    return SemiconvexLayering(arr, layer, layers, env_x, env_y, env_off)


def _semi_peel_exact(pts: list) -> SemiconvexLayering:
    n = len(pts)
    if n == 0:
        raise ValueError("cannot peel an empty cloud")
    if len(pts[0]) != 2:
        raise ValueError("semiconvex peeling supports d = 2")
    _validate_h_cloud([p[1] for p in pts])
    lifted = [_lift_point(p, +1) for p in to_exact(pts)]
    groups: dict[tuple, list[int]] = {}
    for i, u in enumerate(lifted):
        groups.setdefault(u, []).append(i)
    uniq = sorted(groups)
    layer = np.zeros(n, dtype=np.int64)
    layers: list[np.ndarray] = []
    env_x: list[Fraction] = []
    env_y: list[Fraction] = []
    env_off = [0]
    alive = list(range(len(uniq)))
    while alive:
        chain: list[int] = []
        for i in alive:
            while len(chain) >= 2 and (
                orient2d(
                    uniq[chain[-2]][0],
                    uniq[chain[-2]][1],
                    uniq[chain[-1]][0],
                    uniq[chain[-1]][1],
                    uniq[i][0],
                    uniq[i][1],
                )
                < 0
            ):
                chain.pop()
            chain.append(i)
        while len(chain) >= 2 and uniq[chain[-1]][0] == uniq[chain[-2]][0]:
            chain.pop()
        members: list[int] = []
        for i in chain:
            members.extend(groups[uniq[i]])
            env_x.append(uniq[i][0])
            env_y.append(uniq[i][1])
        env_off.append(len(env_x))
        k = len(layers) + 1
        for i in members:
            layer[i] = k
        layers.append(np.asarray(sorted(members), dtype=np.int64))
        drop = set(chain)
        alive = [i for i in alive if i not in drop]
    return SemiconvexLayering(
        pts,
        layer,
        layers,
        np.array(env_x, dtype=object),
        np.array(env_y, dtype=object),
        np.asarray(env_off, dtype=np.int64),
        exact=True,
    )


def semiconvex_first_layer(points) -> np.ndarray:
    """Indices of cloud points on the boundary of the first semiconvex body.

    Every lifted envelope point has a supporting line u_d = a u^d + b whose
    parabola apex height is b + a^2/2 = min over slopes at a = u^d of
    (x_d + (u^d - a)^2/2) >= x_d, so the apex-in-H condition reduces to the
    cloud lying strictly inside H, which the input contract guarantees; the
    check is kept in its tight form.
    """
    lay = semiconvex_peel(points)
    idx = lay.layers[0]
    if lay.exact:
        heights = [lay.points[i][1] for i in idx]
    else:
        heights = as_float_array(points)[idx, 1]
    keep = [i for i, ht in zip(idx, heights) if ht > 0]
    return np.asarray(keep, dtype=np.int64)


def _inside_env_exact(lay: SemiconvexLayering, n: int, q) -> bool:
    a, b = lay.env_off[n - 1], lay.env_off[n]
    if b - a < 2:
        return False
    if not (lay.env_x[a] < q[0] < lay.env_x[b - 1]):
        return False
    lo, hi = a, b - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if lay.env_x[mid] <= q[0]:
            lo = mid
        else:
            hi = mid
    return (
        orient2d(lay.env_x[lo], lay.env_y[lo], lay.env_x[hi], lay.env_y[hi], q[0], q[1])
        > 0
    )


def s_height(layering: SemiconvexLayering, x) -> int:
    """Number of open semiconvex bodies strictly containing x (H-coords)."""
    if layering.exact:
        q = _lift_point(tuple(x), +1)
        qe = tuple(c if isinstance(c, Fraction) else Fraction(c) for c in q)
        lo, hi, best = 1, layering.num_layers, 0
        while lo <= hi:
            mid = (lo + hi) // 2
            if _inside_env_exact(layering, mid, qe):
                best, lo = mid, mid + 1
            else:
                hi = mid - 1
        return best
    return int(s_heights(layering, np.asarray([x], dtype=np.float64))[0])


def s_heights(layering: SemiconvexLayering, queries) -> np.ndarray:
    """Vectorized semiconvex heights (float layerings)."""
    if layering.exact:
        return np.array([s_height(layering, q) for q in queries], dtype=np.int64)
    q = as_float_array(queries)
    return _fast.semi_grid_heights(
        layering.env_x,
        layering.env_y,
        layering.env_off,
        layering.num_layers,
        np.ascontiguousarray(q[:, 0]),
        np.ascontiguousarray(q[:, 1] + 0.5 * q[:, 0] ** 2),
    )


def verify_semidpp(points, bound: int = 64) -> CheckResult:
    """Check the parabola game identity for s at every cloud point.

    s(x) must equal the infimum over parabolas through x of the supremum of
    1 + s(z) over cloud points z strictly under the parabola (empty sup 0).
    Membership of z is linear in the apex abscissa a, so the infimum is
    attained among the critical abscissae where some z crosses the boundary
    (the parabolas through the pair x, z), plus a = x_1 covering clouds with
    no crossings at all.
    """
    if len(points) == 0:
        return CheckResult(True)
    arr = as_float_array(points)
    n, d = arr.shape
    if d != 2:
        raise ValueError("verify_semidpp supports d = 2")
    if n > bound:
        raise ValueError(f"cloud size {n} exceeds bound {bound}")
    _validate_h_cloud(arr[:, 1])
    if _is_small_dyadic(arr):
        lay = semiconvex_peel(arr, engine="fast")
        s = lay.layer_of_point - 1
        for i in range(n):
            dx = arr[:, 0] - arr[i, 0]
            beta = (arr[:, 1] - arr[i, 1]) + 0.5 * (arr[:, 0] ** 2 - arr[i, 0] ** 2)
            others = np.flatnonzero((dx != 0) | (beta != 0))
            g, b = dx[others], beta[others]
            val = 1 + s[others]
            # fallback abscissa x_1: membership sign of a*g - b is exact
            best = int(np.max(val[arr[i, 0] * g - b > 0], initial=0))
            crit = np.flatnonzero(g != 0)
            for w in crit:
                dd = b[w] * g - b * g[w]
                inside = dd > 0 if g[w] > 0 else dd < 0
                best = min(best, int(np.max(val[inside], initial=0)))
            if best != int(s[i]):
                return CheckResult(
                    False,
                    {"point": i, "x": arr[i].tolist(), "s": int(s[i]), "game_value": best},
                )
        return CheckResult(True)
    pts = to_exact(arr)
    lay = _semi_peel_exact(pts)
    s = lay.layer_of_point - 1
    for i in range(n):
        xi = pts[i]
        gs, bs, vals = [], [], []
        for j, z in enumerate(pts):
            if j == i or z == xi:
                continue
            gs.append(z[0] - xi[0])
            bs.append((z[1] - xi[1]) + (z[0] * z[0] - xi[0] * xi[0]) / 2)
            vals.append(1 + int(s[j]))
        cands = [xi[0]] + [b / g for g, b in zip(gs, bs) if g != 0]
        best = None
        for a in cands:
            v = max((vv for g, b, vv in zip(gs, bs, vals) if a * g > b), default=0)
            best = v if best is None else min(best, v)
        game = 0 if best is None else best
        if game != int(s[i]):
            return CheckResult(
                False,
                {"point": i, "x": [float(c) for c in xi], "s": int(s[i]), "game_value": game},
            )
    return CheckResult(True)


def sentinel_stack(n: int, t_height: Fraction, width: Fraction, k: int | None = None):
    """Finite stand-in for an upward-unbounded tail of the cloud.

    Pair j sits at height t_height * 2^j and abscissae +-width * (1 +
    4^(j-k-1)), so every pair frames the strip |x| < width and higher pairs
    stick out strictly further.  Peeling the augmented cloud consumes at
    most the top surviving pair (the crossbar of the hull) and the bottom
    one (on the lower chain) per layer and never a pair in between, so
    k = 2n + 4 pairs outlast any n-point cloud.
    """
    if k is None:
        k = 2 * n + 4
    t = Fraction(t_height)
    w = Fraction(width)
    out = []
    for j in range(1, k + 1):
        wj = w * (1 + Fraction(1, 4 ** (k - j + 1)))
        hj = t * 2**j
        out.append((-wj, hj))
        out.append((wj, hj))
    return out


def correspondence_check(points, t_height=None, k: int | None = None) -> CheckResult:
    """Convex layers of the sentinel-augmented cloud match semiconvex layers
    of the projected cloud, point for point.

    For sets escaping upward inside the parabola domain, projection turns
    convex peeling into semiconvex peeling.  Sentinel pairs flanking the
    cloud emulate the escape: their base height is raised until every chord
    from a cloud point to a sentinel climbs faster than any chord within the
    cloud, which pins the lower chain of each augmented layer to the cloud's
    own lower envelope, while the crossbar between the top pair seals the
    cloud off from above.  The two sides then agree layer by layer and are
    compared in exact arithmetic through the two independent engines.
    """
    pts = to_exact(points)
    n = len(pts)
    if n == 0 or len(pts[0]) != 2:
        raise ValueError("correspondence check needs a planar cloud")
    for p in pts:
        if not p[1] > p[0] * p[0] / 2:
            raise ValueError("cloud must lie strictly inside the parabola domain")
    xs = sorted(p[0] for p in pts)
    for a, b in zip(xs, xs[1:]):
        if a == b:
            raise ValueError("tied abscissae are outside the generic contract")
    top = max(p[1] for p in pts)
    if t_height is not None and not Fraction(t_height) > top:
        raise ValueError("truncation height must exceed the cloud")
    by_x = sorted(pts)
    slope = max(
        (abs(q[1] - p[1]) / (q[0] - p[0]) for p, q in zip(by_x, by_x[1:])),
        default=Fraction(0),
    )
    width = max(abs(p[0]) for p in pts) + 1
    # steep enough to clear every cloud chord, high enough to stay inside P
    base = top + 3 * width * (slope + 1) + width * width + 1
    if t_height is not None:
        base = max(base, Fraction(t_height))
    aug = list(pts) + sentinel_stack(n, base, width, k)
    conv = peel(aug, engine="exact")
    semi = _semi_peel_exact(project(pts))
    for i in range(n):
        if conv.layer_of_point[i] != semi.layer_of_point[i]:
            return CheckResult(
                False,
                {
                    "point": i,
                    "x": [float(c) for c in pts[i]],
                    "convex_layer": int(conv.layer_of_point[i]),
                    "semiconvex_layer": int(semi.layer_of_point[i]),
                },
            )
    return CheckResult(True)


def periodize(points, period: float, copies: int):
    """Tile the base cell (-period/2, period/2) x (0, inf) horizontally."""
    if not period > 0:
        raise ValueError("period must be positive")
    if copies < 0:
        raise ValueError("copies must be nonnegative")
    if is_exact(points):
        pl = Fraction(period)
        base = [p for p in to_exact(points) if -pl / 2 < p[0] < pl / 2 and p[1] > 0]
        return [
            (p[0] + j * pl, p[1])
            for j in range(-copies, copies + 1)
            for p in base
        ]
    arr = as_float_array(points)
    mask = (np.abs(arr[:, 0]) < period / 2) & (arr[:, 1] > 0)
    base = arr[mask]
    tiles = [base + np.array([j * period, 0.0]) for j in range(-copies, copies + 1)]
    return np.concatenate(tiles) if tiles else base


@dataclass(frozen=True)
class AlphaEstimate:
    """Point estimate of the depth-rate constant from one of three routes."""

    alpha_hat: float
    stderr: float
    trials: int
    r: float
    route: str

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")
        if self.trials < 1:
            raise ValueError("at least one trial required")
        if self.route not in ("cell", "maxdepth", "profile"):
            raise ValueError(f"unknown route {self.route!r}")

    def report(self) -> str:
        return "\n".join(
            [
                f"alpha_hat = {self.alpha_hat:.6f}",
                f"stderr = {self.stderr:.6f}",
                f"trials = {self.trials}",
                f"r = {self.r:g}",
                f"route = {self.route}",
            ]
        )


@dataclass
class CellEstimateResult:
    estimate: AlphaEstimate
    records: list
    sensitivity: dict | None = None


def _s_at_query(pts: np.ndarray, qx: float, qy: float) -> int:
    if len(pts) == 0:
        return 0
    ux = pts[:, 0]
    uy = pts[:, 1] + 0.5 * ux**2
    order = np.lexsort((uy, ux))
    out = _fast.semi_peel(
        np.ascontiguousarray(ux[order]),
        np.ascontiguousarray(uy[order]),
        qx,
        qy + 0.5 * qx**2,
        True,
        True,
    )
    return int(out[5])


def _wall_shell(r: float, pitch: float, offset: float) -> np.ndarray:
    ys = np.arange(pitch, r + pitch / 2, pitch)
    xs = np.arange(-r + pitch, r - pitch / 2, pitch) + offset
    xs = xs[np.abs(xs - offset) > pitch / 2]  # keep the query corridor open
    left = np.column_stack([np.full_like(ys, offset - r), ys])
    right = np.column_stack([np.full_like(ys, offset + r), ys])
    top = np.column_stack([xs, np.full_like(xs, r)])
    return np.concatenate([left, right, top])


def _cell_trial(
    seed: int, branch: int, trial: int, r: float, beta: float,
    wall_pitch: float | None, offset: float,
) -> dict:
    rng = trial_rng(seed, branch, trial)
    t0 = time.perf_counter()
    w = r if wall_pitch else beta * r
    pts = poisson_rectangle(rng, offset - w, offset + w, 0.0, w)
    if wall_pitch:
        pts = np.concatenate([pts, _wall_shell(r, wall_pitch, offset)])
    s = _s_at_query(pts, offset, r)
    return {
        "trial": trial,
        "r": r,
        "beta": beta,
        "s_value": s,
        "n_points": len(pts),
        "wall_ms": (time.perf_counter() - t0) * 1000.0,
    }


def _run_cell_branch(
    seed: int, branch: int, trials: int, r: float, beta: float,
    wall_pitch: float | None, offset: float, threads: int,
) -> list[dict]:
    _s_at_query(np.array([[0.0, 1.0]]), 0.0, 2.0)  # warm the kernel once
    if threads <= 1:
        return [
            _cell_trial(seed, branch, t, r, beta, wall_pitch, offset)
            for t in range(trials)
        ]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futs = [
            pool.submit(_cell_trial, seed, branch, t, r, beta, wall_pitch, offset)
            for t in range(trials)
        ]
        return [f.result() for f in futs]


def _summary(records: list[dict], r: float) -> tuple[float, float]:
    vals = np.array([rec["s_value"] for rec in records], dtype=np.float64) / r
    mean = float(vals.mean())
    err = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return mean, err


def cell_estimate(
    r: float,
    beta: float = 3.0,
    trials: int = 50,
    seed: int = 0,
    wall_pitch: float | None = None,
    offset: float = 0.0,
    threads: int | None = None,
    sensitivity: bool = True,
) -> CellEstimateResult:
    """Monte Carlo cell-problem estimate of the depth rate at window size r.

    Each trial samples a unit Poisson cloud on the window (beta r wide and
    tall), evaluates the semiconvex height at the query point r e_d, and
    divides by r.  The optional wall grid emulates a solid exterior
    obstacle on the r-window boundary instead of the wide window.
    """
    if trials < 1:
        raise ValueError("at least one trial required")
    if r < 1 or beta < 1:
        raise ValueError("need r >= 1 and beta >= 1")
    nthreads = threads if threads else min(32, os.cpu_count() or 1)
    records = _run_cell_branch(seed, 0, trials, r, beta, wall_pitch, offset, nthreads)
    mean, err = _summary(records, r)
    est = AlphaEstimate(mean, err, trials, r, "cell")
    sens = None
    if sensitivity:
        recs2 = _run_cell_branch(
            seed, 1, trials, r, beta + 1.0, wall_pitch, offset, nthreads
        )
        m2, e2 = _summary(recs2, r)
        combined = math.hypot(err, e2)
        sens = {
            "beta": beta,
            "alpha_hat_beta": mean,
            "stderr_beta": err,
            "alpha_hat_beta_plus_1": m2,
            "stderr_beta_plus_1": e2,
            "combined_stderr": combined,
            "consistent": abs(mean - m2) < 2 * combined if combined > 0 else True,
        }
    return CellEstimateResult(est, records, sens)

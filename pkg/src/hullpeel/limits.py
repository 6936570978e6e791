"""Continuum objects: the limit operator, exact height profiles, and layer laws.

The scaled height of a peeled cloud converges to the solution of a
degenerate Monge-Ampere equation.  For radial densities the solution is an
explicit one-dimensional integral, which this module evaluates both in
closed form (uniform ball, standard gaussian) and by adaptive quadrature,
so that the two routes can cross-check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .geometry import as_float_array


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


@dataclass(frozen=True)
class RadialDensity:
    """Probability density f(x) = |det A| f_radial(|Ax + b|).

    kind 'uniform_ball' is the normalized indicator of B_radius,
    'gaussian' the standard normal, 'table' a piecewise-linear radial
    profile on a strictly increasing grid (zero beyond the last knot).
    The optional frame (A, b) transports the radial profile to an
    ellipsoidal one without changing the peeling geometry's layer law.
    """

    kind: str
    dim: int = 2
    radius: float = 1.0
    table_r: np.ndarray | None = None
    table_f: np.ndarray | None = None
    frame: tuple[np.ndarray, np.ndarray] | None = field(default=None)

    def __post_init__(self):
        if self.kind not in ("uniform_ball", "gaussian", "table"):
            raise ValueError(f"unknown density kind {self.kind!r}")
        if self.kind == "uniform_ball" and not self.radius > 0:
            raise ValueError("ball radius must be positive")
        if self.kind == "table":
            r = np.asarray(self.table_r, dtype=np.float64)
            f = np.asarray(self.table_f, dtype=np.float64)
            if r.ndim != 1 or r.shape != f.shape or len(r) < 2:
                raise ValueError("table needs matching 1-d r and f grids")
            if not np.all(np.diff(r) > 0):
                raise ValueError("table radii must be strictly increasing")
            if not np.all(f >= 0):
                raise ValueError("table density must be nonnegative")
            object.__setattr__(self, "table_r", r)
            object.__setattr__(self, "table_f", f)
        if self.frame is not None:
            a = np.asarray(self.frame[0], dtype=np.float64)
            b = np.asarray(self.frame[1], dtype=np.float64)
            if a.shape != (self.dim, self.dim) or b.shape != (self.dim,):
                raise ValueError("frame shape mismatch")
            if abs(np.linalg.det(a)) < 1e-300:
                raise ValueError("frame matrix is singular")
            object.__setattr__(self, "frame", (a, b))

    def f_radial(self, r):
        r = np.asarray(r, dtype=np.float64)
        if self.kind == "uniform_ball":
            vol = unit_ball_volume(self.dim) * self.radius**self.dim
            return np.where(r <= self.radius, 1.0 / vol, 0.0)
        if self.kind == "gaussian":
            return (2 * math.pi) ** (-self.dim / 2) * np.exp(-(r**2) / 2)
        return np.where(
            r <= self.table_r[-1], np.interp(r, self.table_r, self.table_f), 0.0
        )

    def pdf(self, x) -> np.ndarray:
        pts = as_float_array(x)
        if self.frame is not None:
            a, b = self.frame
            pts = pts @ a.T + b
            jac = abs(np.linalg.det(a))
        else:
            jac = 1.0
        return jac * self.f_radial(np.linalg.norm(pts, axis=1))

    def support_radius(self) -> float:
        if self.kind == "uniform_ball":
            return self.radius
        if self.kind == "table":
            return float(self.table_r[-1])
        return math.inf

    def h0(self) -> float:
        return h_radial(0.0, self)

    def as_config(self) -> dict:
        """Flat echo of the density for report embedding."""
        out: dict = {"kind": self.kind, "dim": self.dim}
        if self.kind == "uniform_ball":
            out["radius"] = self.radius
        if self.kind == "table":
            out["table_r"] = [float(v) for v in self.table_r]
            out["table_f"] = [float(v) for v in self.table_f]
        if self.frame is not None:
            a, b = self.frame
            out["frame_a"] = [float(v) for v in a.reshape(-1)]
            out["frame_b"] = [float(v) for v in b]
        return out

    @staticmethod
    def from_config(entries: dict) -> "RadialDensity":
        """Build from a flat key-value mapping (see the config file format)."""
        kind = str(entries.get("kind", "uniform_ball")).strip()
        dim = int(entries.get("dim", 2))
        kwargs: dict = {}
        if "radius" in entries:
            kwargs["radius"] = float(entries["radius"])
        if kind == "table":
            kwargs["table_r"] = np.array(
                [float(v) for v in str(entries["table_r"]).split()]
            )
            kwargs["table_f"] = np.array(
                [float(v) for v in str(entries["table_f"]).split()]
            )
        frame = None
        if "frame_a" in entries:
            vals = [float(v) for v in str(entries["frame_a"]).split()]
            a = np.array(vals, dtype=np.float64).reshape(dim, dim)
            b = np.zeros(dim)
            if "frame_b" in entries:
                b = np.array([float(v) for v in str(entries["frame_b"]).split()])
            frame = (a, b)
        elif "cov" in entries:
            # gaussian sugar: covariance (row-major) and mean become the
            # whitening frame A = cov^{-1/2}, b = -A mean
            vals = [float(v) for v in str(entries["cov"]).split()]
            cov = np.array(vals, dtype=np.float64).reshape(dim, dim)
            w, v = np.linalg.eigh(cov)
            if np.any(w <= 0):
                raise ValueError("covariance must be positive definite")
            a = v @ np.diag(w**-0.5) @ v.T
            mean = np.zeros(dim)
            if "mean" in entries:
                mean = np.array([float(v) for v in str(entries["mean"]).split()])
            frame = (a, -a @ mean)
        return RadialDensity(kind, dim=dim, frame=frame, **kwargs)


def _profile_integrand(density: RadialDensity):
    d = density.dim
    a = (d - 1) / (d + 1)

    def g(s):
        return s**a * density.f_radial(s) ** (2 / (d + 1))

    return g


def _gaussian_h(r: float, d: int) -> float:
    k = d / (d + 1)
    c = (2 * math.pi) ** (-d / (d + 1)) * (d + 1) ** k / 2 * math.gamma(k)
    return c * special.gammaincc(k, r**2 / (d + 1))


def h_radial(r_query: float, density: RadialDensity) -> float:
    """Limit height profile at radius r_query.

    The profile integrates the density kernel from the query radius out to
    the edge of the support; it is the exact scaled-height limit for a
    radial density.  Closed forms cover the two named kinds; the table kind
    goes through quadrature.
    """
    if r_query < 0:
        raise ValueError("radius must be nonnegative")
    d = density.dim
    if density.kind == "uniform_ball":
        rr = density.radius
        if r_query >= rr:
            return 0.0
        f = 1.0 / (unit_ball_volume(d) * rr**d)
        e = 2 * d / (d + 1)
        return f ** (2 / (d + 1)) * (d + 1) / (2 * d) * (rr**e - r_query**e)
    if density.kind == "gaussian":
        return _gaussian_h(r_query, d)
    top = density.support_radius()
    if r_query > top:
        raise ValueError("query outside the table support")
    return h_radial_quad(r_query, density)


def h_radial_quad(r_query: float, density: RadialDensity) -> float:
    """Generic quadrature route for the same profile (cross-check oracle)."""
    if r_query < 0:
        raise ValueError("radius must be nonnegative")
    g = _profile_integrand(density)
    top = density.support_radius()
    if math.isinf(top):
        # truncate the gaussian tail where the integrand is negligible
        top = max(r_query + 1.0, math.sqrt((density.dim + 1) * 40.0))
        if r_query >= top:
            return 0.0
    if r_query >= top:
        return 0.0
    pts = None
    if density.kind == "table":
        knots = density.table_r
        pts = [k for k in knots if r_query < k < top]
    val, _ = integrate.quad(g, r_query, top, epsabs=1e-13, limit=200, points=pts)
    return val


def h_affine(x, density: RadialDensity) -> float:
    """Height profile for a frame-transported density: the frame map is
    applied to the query and the radial profile is evaluated at its norm."""
    q = np.asarray(x, dtype=np.float64)
    if density.frame is not None:
        a, b = density.frame
        q = a @ q + b
    base = density if density.frame is None else RadialDensity(
        density.kind,
        dim=density.dim,
        radius=density.radius,
        table_r=density.table_r,
        table_f=density.table_f,
    )
    return h_radial(float(np.linalg.norm(q)), base)


def radial_mass(density: RadialDensity, r: float) -> float:
    """Probability mass within base-frame radius r (frames preserve it)."""
    if r <= 0:
        return 0.0
    d = density.dim
    if density.kind == "uniform_ball":
        return min(r / density.radius, 1.0) ** d
    if density.kind == "gaussian":
        return float(special.gammainc(d / 2, r * r / 2))
    top = min(r, density.support_radius())
    shell = d * unit_ball_volume(d)
    val, _ = integrate.quad(
        lambda s: density.f_radial(s) * s ** (d - 1),
        0.0,
        top,
        epsabs=1e-12,
        limit=200,
        points=[v for v in density.table_r if v < top],
    )
    return shell * val


def _invert_h(level: float, density: RadialDensity, tol: float = 1e-10) -> float:
    """Largest radius with profile value above `level` (left inverse)."""
    top = density.support_radius()
    if math.isinf(top):
        top = math.sqrt((density.dim + 1) * 40.0)
        while h_radial(top, density) > level:
            top *= 2
    lo, hi = 0.0, top
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if h_radial(mid, density) > level:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def N_of_t(t: float, density: RadialDensity, alpha: float) -> float:
    """Scaled number of points on the layer at scaled depth t.

    The depth t selects the radius r where alpha times the profile equals t;
    the layer-count law then weighs the density shell at that radius.
    Closed forms for the named kinds, bisection inversion otherwise.
    """
    d = density.dim
    h0 = alpha * h_radial(0.0, density)
    if not 0 <= t < h0:
        raise ValueError(f"t must lie in [0, {h0:.6g})")
    vol = unit_ball_volume(d)
    if density.kind == "uniform_ball":
        # dilation invariance cancels every radius power out of c
        c = 2 * d * vol ** (2 / (d + 1)) / (alpha * (d + 1))
        f = 1.0 / (vol * density.radius**d)
        base = d * vol / alpha * f ** ((d - 1) / (d + 1))
        rmax = density.radius
        rt = rmax * (1 - c * t) ** (1 / (2 * d / (d + 1)))
        return base * rt ** (d * (d - 1) / (d + 1))
    if density.kind == "gaussian":
        k = d / (d + 1)
        cc = (2 * math.pi) ** (-d / (d + 1)) * (d + 1) ** k / 2 * math.gamma(k)
        u = special.gammainccinv(k, t / (alpha * cc))
        if not math.isfinite(u):
            return 0.0  # t = 0 pushes the layer radius to infinity
        r = math.sqrt((d + 1) * u)
        return (
            d
            * vol
            / alpha
            * (r / math.sqrt(2 * math.pi)) ** (d * (d - 1) / (d + 1))
            * math.exp(-(r**2) * (d - 1) / (2 * (d + 1)))
        )
    return N_of_t_generic(t, density, alpha)


def N_of_t_generic(t: float, density: RadialDensity, alpha: float) -> float:
    """Quadrature-plus-bisection route for the layer-count law (oracle)."""
    d = density.dim
    h0 = alpha * h_radial(0.0, density)
    if not 0 <= t < h0:
        raise ValueError(f"t must lie in [0, {h0:.6g})")
    r = _invert_h(t / alpha, density)
    f = float(density.f_radial(r))
    return (
        d
        * unit_ball_volume(d)
        / alpha
        * f ** ((d - 1) / (d + 1))
        * r ** (d * (d - 1) / (d + 1))
    )


def _adjugate(m: np.ndarray) -> np.ndarray:
    d = m.shape[0]
    if d == 1:
        return np.ones((1, 1))
    if d == 2:
        return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
    if d == 3:
        out = np.empty((3, 3))
        for i in range(3):
            for j in range(3):
                minor = np.delete(np.delete(m, j, axis=0), i, axis=1)
                out[i, j] = (-1) ** (i + j) * np.linalg.det(minor)
        return out
    # Faddeev-LeVerrier: adj(M) = (-1)^{d-1} M_{d-1} with the usual recursion
    n = np.eye(d)
    mk = np.eye(d)
    for k in range(1, d):
        mk = m @ mk
        c = -np.trace(mk) / k
        mk = mk + c * np.eye(d)
        n = mk
    return (-1) ** (d - 1) * n


def F(p, A, tol: float = 1e-10) -> float:
    """Degenerate-elliptic operator driving the peeling limit.

    Returns the cofactor quadratic form of -A in the direction p when A is
    negative semidefinite on the orthogonal complement of p, and 0 when the
    constraint fails.  At p = 0 the constraint ranges over all directions
    and the form vanishes, so F(0, .) = 0, which keeps F continuous.

    tol bounds the eigenvalue slack in the semidefiniteness test; callers
    working from finite-difference Hessians should pass a tolerance above
    their derivative noise.
    """
    p = np.asarray(p, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    d = len(p)
    if A.shape != (d, d):
        raise ValueError("shape mismatch between p and A")
    scale = max(1.0, float(np.abs(A).max()))
    if np.abs(A - A.T).max() > 1e-12 * scale:
        raise ValueError("A must be symmetric")
    A = 0.5 * (A + A.T)
    norm = np.linalg.norm(p)
    if norm == 0:
        return 0.0
    if d > 1:
        q, _ = np.linalg.qr(np.column_stack([p / norm, np.eye(d)]))
        basis = q[:, 1:d]
        proj = basis.T @ A @ basis
        if np.max(np.linalg.eigvalsh(proj)) > tol * scale:
            return 0.0
    return float(p @ _adjugate(-A) @ p)


def barrier_psi(x) -> float:
    """Boundary-layer barrier: vanishes on the wall, superunit interior F."""
    q = np.asarray(x, dtype=np.float64)
    d = len(q)
    xd = q[-1]
    if xd < 0:
        raise ValueError("barrier domain is the upper half-space")
    horiz = float(q[:-1] @ q[:-1])
    return 2.0 * xd ** (2 / (d + 1)) * (1 - horiz / 2) ** ((d - 1) / (d + 1))


def _fd_gradient(fn, x: np.ndarray, h: float) -> np.ndarray:
    d = len(x)
    g = np.empty(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        g[i] = (fn(x + e) - fn(x - e)) / (2 * h)
    return g


def _fd_hessian(fn, x: np.ndarray, h: float) -> np.ndarray:
    d = len(x)
    out = np.empty((d, d))
    f0 = fn(x)
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h
        out[i, i] = (fn(x + ei) - 2 * f0 + fn(x - ei)) / h**2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = h
            v = (
                fn(x + ei + ej) - fn(x + ei - ej) - fn(x - ei + ej) + fn(x - ei - ej)
            ) / (4 * h**2)
            out[i, j] = v
            out[j, i] = v
    return out


def barrier_check(
    grid: np.ndarray | None = None,
    d: int = 2,
    step: float = 1e-5,
    tol: float = 1e-4,
) -> float:
    """Minimum of F(D psi, D^2 psi) over a grid via finite differences.

    Default grid: 50 x 50 lattice over B_0.9 intersected with {x_d > 0.05}.
    The admissibility tolerance is loosened to sit above the second-order
    finite-difference noise.
    """
    if grid is None:
        if d != 2:
            raise ValueError("default grid is two-dimensional")
        s = np.linspace(-0.9, 0.9, 50)
        t = np.linspace(0.05, 0.9, 50)
        xx, yy = np.meshgrid(s, t)
        pts = np.column_stack([xx.ravel(), yy.ravel()])
        grid = pts[np.linalg.norm(pts, axis=1) < 0.9]
    best = math.inf
    for x in np.asarray(grid, dtype=np.float64):
        g = _fd_gradient(barrier_psi, x, step)
        hess = _fd_hessian(barrier_psi, x, step)
        hess = 0.5 * (hess + hess.T)
        best = min(best, F(g, hess, tol=tol))
    return best


@dataclass(frozen=True)
class SimpleTestFunction:
    """Composition sigma(phi(a x + b)) with phi the paraboloid gauge.

    phi(y) = y_d - |y^d|^2 / 2 solves F = 1 exactly; composing with a
    monotone scalar sigma and a unimodular affine map keeps the F value
    explicitly computable through the chain rule.
    """

    sigma: object
    sigma_d1: object
    sigma_d2: object
    matrix: np.ndarray
    offset: np.ndarray

    def _inner(self, x: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        d = len(x)
        y = self.matrix @ x + self.offset
        phi = y[-1] - float(y[:-1] @ y[:-1]) / 2
        dphi = np.concatenate([-y[:-1], [1.0]])
        d2phi = -np.eye(d)
        d2phi[-1, -1] = 0.0
        return phi, dphi, d2phi

    def value(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        phi, _, _ = self._inner(x)
        return float(self.sigma(phi))

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        phi, dphi, _ = self._inner(x)
        return float(self.sigma_d1(phi)) * (self.matrix.T @ dphi)

    def hessian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        phi, dphi, d2phi = self._inner(x)
        s1 = float(self.sigma_d1(phi))
        s2 = float(self.sigma_d2(phi))
        g = self.matrix.T @ dphi
        return s2 * np.outer(g, g) + s1 * (self.matrix.T @ d2phi @ self.matrix)

    def f_value(self, x, tol: float = 1e-10) -> float:
        return F(self.gradient(x), self.hessian(x), tol=tol)


def simple_test_function(
    sigma, sigma_d1, sigma_d2, matrix=None, offset=None, dim: int = 2
) -> SimpleTestFunction:
    """Build a test function from scalar profile closures and a unimodular map."""
    m = np.eye(dim) if matrix is None else np.asarray(matrix, dtype=np.float64)
    b = np.zeros(len(m)) if offset is None else np.asarray(offset, dtype=np.float64)
    if abs(abs(np.linalg.det(m)) - 1.0) > 1e-9:
        raise ValueError("affine map must be unimodular")
    return SimpleTestFunction(sigma, sigma_d1, sigma_d2, m, b)


def write_profile_csv(path, density: RadialDensity, radii) -> None:
    """CSV rows (r, h) of the limit profile on the given radii."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "h"])
        for r in radii:
            w.writerow([repr(float(r)), repr(h_radial(float(r), density))])

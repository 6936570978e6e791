"""Compiled kernels for the hot peeling loops.

All kernels take lexicographically pre-sorted, duplicate-free float64
coordinates.  Orientation signs go through a static filter: a determinant
within the float error bound of zero counts as collinear.  On clouds whose
coordinates are dyadic rationals of moderate size every determinant is exact,
so the filter never fires and the kernels agree bit-for-bit with the exact
rational engines; on continuous random clouds the ambiguous band is ~1e-16
relative and only reclassifies points that sit on a hull edge to within
rounding.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_ERRB = 3.3306690738754716e-16


@njit(cache=True, inline="always")
def _osign(ax, ay, bx, by, cx, cy):
    detl = (bx - ax) * (cy - ay)
    detr = (by - ay) * (cx - ax)
    det = detl - detr
    err = _ERRB * (abs(detl) + abs(detr))
    if det > err:
        return 1
    if det < -err:
        return -1
    return 0


@njit(cache=True, nogil=True)
def peel_layers(xs, ys):
    """Convex layers of a sorted planar cloud.

    Returns (layer, poly_x, poly_y, poly_off, n_layers): layer[i] is the
    1-based layer of sorted point i; the strict ccw hull corners of layer L
    occupy poly slots poly_off[L-1]:poly_off[L].
    """
    n = xs.shape[0]
    layer = np.zeros(n, np.int64)
    poly_x = np.empty(n, np.float64)
    poly_y = np.empty(n, np.float64)
    poly_off = np.zeros(n + 1, np.int64)
    ax = xs.copy()
    ay = ys.copy()
    aid = np.arange(n)
    chain = np.empty(n + 1, np.int64)
    upchn = np.empty(n + 1, np.int64)
    onb = np.empty(n, np.uint8)
    m = n
    nlay = 0
    filled = 0
    while m > 0:
        nlay += 1
        if m <= 2:
            for i in range(m):
                layer[aid[i]] = nlay
                poly_x[filled] = ax[i]
                poly_y[filled] = ay[i]
                filled += 1
            poly_off[nlay] = filled
            break
        for i in range(m):
            onb[i] = 0
        # boundary chains keep collinear points: the whole of the layer
        # boundary is deleted, corners and edge-interior points alike
        k = 0
        for i in range(m):
            while k >= 2 and _osign(
                ax[chain[k - 2]], ay[chain[k - 2]], ax[chain[k - 1]], ay[chain[k - 1]], ax[i], ay[i]
            ) < 0:
                k -= 1
            chain[k] = i
            k += 1
        for t in range(k):
            onb[chain[t]] = 1
        k = 0
        for i in range(m - 1, -1, -1):
            while k >= 2 and _osign(
                ax[chain[k - 2]], ay[chain[k - 2]], ax[chain[k - 1]], ay[chain[k - 1]], ax[i], ay[i]
            ) < 0:
                k -= 1
            chain[k] = i
            k += 1
        for t in range(k):
            onb[chain[t]] = 1
        # strict corners only, for the stored query polygon
        k = 0
        for i in range(m):
            while k >= 2 and _osign(
                ax[chain[k - 2]], ay[chain[k - 2]], ax[chain[k - 1]], ay[chain[k - 1]], ax[i], ay[i]
            ) <= 0:
                k -= 1
            chain[k] = i
            k += 1
        klo = k
        k = 0
        for i in range(m - 1, -1, -1):
            while k >= 2 and _osign(
                ax[upchn[k - 2]], ay[upchn[k - 2]], ax[upchn[k - 1]], ay[upchn[k - 1]], ax[i], ay[i]
            ) <= 0:
                k -= 1
            upchn[k] = i
            k += 1
        kup = k
        for t in range(klo - 1):
            poly_x[filled] = ax[chain[t]]
            poly_y[filled] = ay[chain[t]]
            filled += 1
        for t in range(kup - 1):
            poly_x[filled] = ax[upchn[t]]
            poly_y[filled] = ay[upchn[t]]
            filled += 1
        poly_off[nlay] = filled
        # record and compact
        w = 0
        for i in range(m):
            if onb[i]:
                layer[aid[i]] = nlay
            else:
                ax[w] = ax[i]
                ay[w] = ay[i]
                aid[w] = aid[i]
                w += 1
        m = w
    return layer, poly_x[:filled], poly_y[:filled], poly_off[: nlay + 1], nlay


@njit(cache=True, inline="always")
def _inside_strict(px, py, a, b, x, y):
    k = b - a
    if k < 3:
        return False
    for i in range(a, b):
        j = i + 1 if i + 1 < b else a
        if _osign(px[i], py[i], px[j], py[j], x, y) <= 0:
            return False
    return True


@njit(cache=True, nogil=True, parallel=True)
def grid_heights(poly_x, poly_y, poly_off, n_layers, qx, qy):
    """Height at each query: the deepest layer whose open hull contains it.

    Layer polygons are nested, so a binary search over the layer index works.
    """
    nq = qx.shape[0]
    out = np.zeros(nq, np.int64)
    for t in prange(nq):
        lo = 1
        hi = n_layers
        best = 0
        while lo <= hi:
            mid = (lo + hi) // 2
            if _inside_strict(poly_x, poly_y, poly_off[mid - 1], poly_off[mid], qx[t], qy[t]):
                best = mid
                lo = mid + 1
            else:
                hi = mid - 1
        out[t] = best
    return out


@njit(cache=True, inline="always")
def _env_chain(ax, ay, m, chain):
    """Lower envelope chain (collinear points kept, trailing column trimmed).

    Returns the chain length.  Points must be sorted lexicographically; the
    surviving chain has strictly increasing abscissae and holds exactly the
    points lying on the graph of the lower convex envelope.
    """
    k = 0
    for i in range(m):
        while k >= 2 and _osign(
            ax[chain[k - 2]], ay[chain[k - 2]], ax[chain[k - 1]], ay[chain[k - 1]], ax[i], ay[i]
        ) < 0:
            k -= 1
        chain[k] = i
        k += 1
    # points stacked above the envelope at the rightmost abscissa are not
    # supported by any non-vertical line; drop them down to the column minimum
    while k >= 2 and ax[chain[k - 1]] == ax[chain[k - 2]]:
        k -= 1
    return k


@njit(cache=True, inline="always")
def _above_env(ax, ay, chain, k, x, y):
    """Strictly inside the envelope region: abscissa strictly inside the span
    and point strictly above the envelope graph."""
    if k < 2:
        return False
    if not (ax[chain[0]] < x and x < ax[chain[k - 1]]):
        return False
    lo = 0
    hi = k - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ax[chain[mid]] <= x:
            lo = mid
        else:
            hi = mid
    a = chain[lo]
    b = chain[hi]
    return _osign(ax[a], ay[a], ax[b], ay[b], x, y) > 0


@njit(cache=True, nogil=True)
def semi_peel(ux, uy, qx, qy, use_query, stop_on_exit):
    """Semiconvex layers of a lifted cloud via repeated lower envelopes.

    Input coordinates are the lifted (parabola-frame) points, sorted
    lexicographically and duplicate-free.  Returns
    (layer, env_x, env_y, env_off, n_layers, s_query) where s_query counts
    the peeling regions that strictly contained the lifted query point
    (-1 when use_query is false).
    """
    n = ux.shape[0]
    layer = np.zeros(n, np.int64)
    env_x = np.empty(n, np.float64)
    env_y = np.empty(n, np.float64)
    env_off = np.zeros(n + 1, np.int64)
    ax = ux.copy()
    ay = uy.copy()
    aid = np.arange(n)
    chain = np.empty(n + 1, np.int64)
    m = n
    nlay = 0
    filled = 0
    s_query = -1
    if use_query:
        s_query = 0
    query_in = use_query
    while m > 0:
        k = _env_chain(ax, ay, m, chain)
        if query_in:
            if _above_env(ax, ay, chain, k, qx, qy):
                s_query += 1
            else:
                query_in = False
                if stop_on_exit:
                    break
        nlay += 1
        for t in range(k):
            i = chain[t]
            layer[aid[i]] = nlay
            env_x[filled] = ax[i]
            env_y[filled] = ay[i]
            filled += 1
        env_off[nlay] = filled
        w = 0
        drop = 0
        for i in range(m):
            if drop < k and chain[drop] == i:
                drop += 1
            else:
                ax[w] = ax[i]
                ay[w] = ay[i]
                aid[w] = aid[i]
                w += 1
        m = w
    return layer, env_x[:filled], env_y[:filled], env_off[: nlay + 1], nlay, s_query


@njit(cache=True, nogil=True, parallel=True)
def semi_grid_heights(env_x, env_y, env_off, n_layers, qx, qy):
    """Semiconvex height at lifted queries via nested envelope regions."""
    nq = qx.shape[0]
    out = np.zeros(nq, np.int64)
    for t in prange(nq):
        lo = 1
        hi = n_layers
        best = 0
        while lo <= hi:
            mid = (lo + hi) // 2
            a = env_off[mid - 1]
            b = env_off[mid]
            k = b - a
            inside = False
            if k >= 2 and env_x[a] < qx[t] and qx[t] < env_x[b - 1]:
                s = a
                e = b - 1
                while e - s > 1:
                    c = (s + e) // 2
                    if env_x[c] <= qx[t]:
                        s = c
                    else:
                        e = c
                inside = _osign(env_x[s], env_y[s], env_x[e], env_y[e], qx[t], qy[t]) > 0
            if inside:
                best = mid
                lo = mid + 1
            else:
                hi = mid - 1
        out[t] = best
    return out

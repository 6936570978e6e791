"""Seeded Monte Carlo experiments on peeling depth, shape, and layer counts.

Every experiment consumes a base seed and spawns one independent stream per
(schedule index, trial), so reports replay bit-for-bit regardless of thread
count; wall-clock columns are the one diagnostic exempt from that contract.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .limits import RadialDensity, N_of_t, _invert_h, h_radial, radial_mass
from .peeling import heights, peel
from .sampling import RNG_ALGORITHM, SamplerSpec, sample
from .semiconvex import AlphaEstimate, cell_estimate

try:
    from importlib.metadata import version

    BUILD_ID = "hullpeel-" + version("hullpeel")
except Exception:  # pragma: no cover - source checkouts without metadata
    BUILD_ID = "hullpeel-dev"


def _json_default(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not serializable: {type(v)!r}")


def _csv_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class ExperimentReport:
    """Replayable record of one experiment run.

    config echoes every input needed to reproduce the run (seed included);
    records hold one dict per trial in schedule-major order; summary holds
    the fitted quantities.
    """

    name: str
    config: dict
    records: list
    summary: dict

    def to_json(self) -> str:
        payload = {
            "name": self.name,
            "config": self.config,
            "records": self.records,
            "summary": self.summary,
        }
        return json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"

    def records_csv(self) -> str:
        if not self.records:
            return ""
        keys = list(self.records[0].keys())
        lines = [",".join(keys)]
        for rec in self.records:
            lines.append(",".join(_csv_cell(rec[k]) for k in keys))
        return "\n".join(lines) + "\n"


def _nthreads(threads: int | None) -> int:
    return threads if threads else min(32, os.cpu_count() or 1)


def _map_ordered(fn, arg_tuples, threads: int) -> list:
    if threads <= 1:
        return [fn(*args) for args in arg_tuples]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futs = [pool.submit(fn, *args) for args in arg_tuples]
        return [f.result() for f in futs]


def _ols(x, y) -> tuple[float, float, float, float]:
    """Least-squares line fit: slope, intercept and their standard errors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(x)
    design = np.column_stack([x, np.ones(n)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    if n > 2:
        resid = y - design @ coef
        s2 = float(resid @ resid) / (n - 2)
        sxx = float(np.sum((x - x.mean()) ** 2))
        se_slope = math.sqrt(s2 / sxx) if sxx > 0 else 0.0
        se_int = math.sqrt(s2 * (1.0 / n + x.mean() ** 2 / sxx)) if sxx > 0 else 0.0
    else:
        se_slope = se_int = 0.0
    return slope, intercept, se_slope, se_int


def _base_config(seed: int, density: RadialDensity, **extra) -> dict:
    cfg = {
        "seed": seed,
        "rng_algorithm": RNG_ALGORITHM,
        "build": BUILD_ID,
        "density": density.as_config(),
    }
    cfg.update(extra)
    return cfg


def exp_max_depth_scaling(
    n_schedule,
    trials: int,
    seed: int = 0,
    density: RadialDensity | None = None,
    threads: int | None = None,
) -> ExperimentReport:
    """Growth of the deepest layer across cloud sizes.

    Fits log mean max height against log n; for the frameless uniform ball
    the prefactor also converts into a depth-rate estimate at each n via the
    exact profile height at the center.
    """
    ns = [int(round(float(v))) for v in n_schedule]
    if len(ns) < 2 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_schedule must be increasing with at least two sizes")
    if trials < 1:
        raise ValueError("at least one trial required")
    density = density or RadialDensity("uniform_ball")
    d = density.dim
    e = 2.0 / (d + 1)

    def one(i: int, t: int) -> dict:
        cloud = sample(SamplerSpec("iid", ns[i], density, seed), trial=(i, t))
        t0 = time.perf_counter()
        lay = peel(cloud)
        return {
            "n": ns[i],
            "trial": t,
            "max_height": lay.num_layers - 1,
            "n_points": len(cloud),
            "wall_ms": (time.perf_counter() - t0) * 1000.0,
        }

    args = [(i, t) for i in range(len(ns)) for t in range(trials)]
    records = _map_ordered(one, args, _nthreads(threads))
    by_n = [
        np.array([r["max_height"] for r in records if r["n"] == n], dtype=np.float64)
        for n in ns
    ]
    means = [float(v.mean()) for v in by_n]
    sems = [
        float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0 for v in by_n
    ]
    slope, intercept, se_slope, _ = _ols(np.log(ns), np.log(means))
    summary: dict = {
        "n": ns,
        "mean_max_height": means,
        "sem_max_height": sems,
        "slope": slope,
        "slope_stderr": se_slope,
        "intercept": intercept,
        "expected_slope": e,
    }
    if density.kind == "uniform_ball" and density.frame is None:
        h0 = density.h0()
        scale = [n**e * h0 for n in ns]
        alpha_by_n = [m / s for m, s in zip(means, scale)]
        alpha_sem = [sv / s for sv, s in zip(sems, scale)]
        # finite-size drift is close to linear in n^(-1/(d+1)); the intercept
        # of that fit is the reported large-n value
        xs = [n ** (-1.0 / (d + 1)) for n in ns]
        _, a_inf, _, se_a_inf = _ols(xs, alpha_by_n)
        summary.update(
            {
                "alpha_by_n": alpha_by_n,
                "alpha_sem_by_n": alpha_sem,
                "alpha_largest_n": alpha_by_n[-1],
                "alpha_largest_n_stderr": alpha_sem[-1],
                "alpha_extrapolated": a_inf,
                "alpha_extrapolated_stderr": se_a_inf,
            }
        )
    cfg = _base_config(
        seed, density, n_schedule=ns, trials=trials, mode="iid"
    )
    return ExperimentReport("max_depth_scaling", cfg, records, summary)


def _gaussian_grid_radius() -> float:
    # radius where the density has decayed to ~1e-9 of its peak
    return math.sqrt(2 * (9 * math.log(10)))


def shape_grid(density: RadialDensity, pitch: float) -> tuple[np.ndarray, np.ndarray]:
    """Query grid over the support plus the exact profile height per node.

    The grid lives on the base radial frame and is mapped back through the
    affine frame, so profile values stay exact closed forms.
    """
    rad = density.support_radius()
    if math.isinf(rad):
        rad = _gaussian_grid_radius()
    axis = np.arange(-rad, rad + pitch / 2, pitch)
    mesh = np.meshgrid(*([axis] * density.dim), indexing="ij")
    base = np.column_stack([m.reshape(-1) for m in mesh])
    base = base[np.linalg.norm(base, axis=1) <= rad]
    hvals = np.array([h_radial(r, density) for r in np.linalg.norm(base, axis=1)])
    if density.frame is not None:
        a, b = density.frame
        queries = np.linalg.solve(a, (base - b).T).T
    else:
        queries = base
    return queries, hvals


def exp_limit_shape(
    density: RadialDensity,
    m_schedule,
    trials: int,
    alpha: float,
    grid: float = 0.02,
    seed: int = 0,
    threads: int | None = None,
) -> ExperimentReport:
    """Sup-norm gap between the rescaled empirical height and the profile."""
    ms = [float(v) for v in m_schedule]
    if trials < 1:
        raise ValueError("at least one trial required")
    queries, hvals = shape_grid(density, grid)
    target = alpha * hvals
    e = 2.0 / (density.dim + 1)

    def one(i: int, t: int) -> dict:
        cloud = sample(SamplerSpec("poisson", ms[i], density, seed), trial=(i, t))
        t0 = time.perf_counter()
        if len(cloud) == 0:
            err = float(np.max(target))
        else:
            lay = peel(cloud)
            hq = heights(lay, queries).astype(np.float64)
            err = float(np.max(np.abs(ms[i] ** (-e) * hq - target)))
        return {
            "m": ms[i],
            "trial": t,
            "sup_error": err,
            "n_points": len(cloud),
            "wall_ms": (time.perf_counter() - t0) * 1000.0,
        }

    args = [(i, t) for i in range(len(ms)) for t in range(trials)]
    records = _map_ordered(one, args, _nthreads(threads))
    medians, means_ = [], []
    for m in ms:
        errs = np.array([r["sup_error"] for r in records if r["m"] == m])
        medians.append(float(np.median(errs)))
        means_.append(float(errs.mean()))
    summary = {
        "m": ms,
        "median_sup_error": medians,
        "mean_sup_error": means_,
        "monotone_decreasing": all(b < a for a, b in zip(medians, medians[1:])),
        "grid_nodes": int(len(queries)),
        "grid_pitch": grid,
        "alpha": alpha,
        "alpha_h0": float(alpha * density.h0()),
    }
    cfg = _base_config(
        seed, density, m_schedule=ms, trials=trials, grid=grid, alpha=alpha,
        mode="poisson",
    )
    return ExperimentReport("limit_shape", cfg, records, summary)


def exp_layer_counts(
    density: RadialDensity,
    n: int,
    trials: int,
    alpha: float,
    seed: int = 0,
    threads: int | None = None,
    window: tuple[float, float] = (0.2, 0.6),
) -> ExperimentReport:
    """Distribution of points among layers versus the continuum curve.

    Layer index i rescales to depth t = i n^(-2/(d+1)) and counts by
    n^(-(d-1)/(d+1)); the comparison curve is the layer-count law of the
    density.  Also reports a windowed count share against the exact mass of
    the corresponding profile band.
    """
    if density.kind not in ("uniform_ball", "gaussian"):
        raise ValueError("layer-count law needs a named density kind")
    if trials < 1:
        raise ValueError("at least one trial required")
    n = int(n)
    d = density.dim
    e = 2.0 / (d + 1)

    def one(t: int) -> tuple[dict, np.ndarray]:
        cloud = sample(SamplerSpec("iid", n, density, seed), trial=t)
        t0 = time.perf_counter()
        lay = peel(cloud)
        counts = lay.layer_counts()
        rec = {
            "trial": t,
            "n": n,
            "num_layers": int(len(counts)),
            "count_sum": int(counts.sum()),
            "wall_ms": (time.perf_counter() - t0) * 1000.0,
        }
        return rec, counts

    out = _map_ordered(one, [(t,) for t in range(trials)], _nthreads(threads))
    records = [rec for rec, _ in out]
    counts_acc = [c for _, c in out]
    depth = max(len(c) for c in counts_acc)
    table = np.zeros((trials, depth))
    for row, c in zip(table, counts_acc):
        row[: len(c)] = c
    mean_counts = table.mean(axis=0)
    idx = np.arange(1, depth + 1, dtype=np.float64)
    t_grid = idx * n ** (-e)
    scaled = mean_counts * n ** (-(d - 1) / (d + 1))
    h0 = density.h0()
    cap = alpha * h0
    continuum = np.array(
        [N_of_t(t, density, alpha) if t < cap else 0.0 for t in t_grid]
    )
    bulk = (t_grid >= 0.1 * cap) & (t_grid <= 0.9 * cap)
    denom = float(continuum[bulk].sum())
    bulk_l1 = float(np.abs(scaled[bulk] - continuum[bulk]).sum() / denom) if denom else math.inf
    wa, wb = (window[0] * cap, window[1] * cap)
    in_window = (t_grid >= wa) & (t_grid <= wb)
    empirical_share = float(mean_counts[in_window].sum() / n)
    r_hi = _invert_h(wa / alpha, density)
    r_lo = _invert_h(wb / alpha, density)
    exact_share = radial_mass(density, r_hi) - radial_mass(density, r_lo)
    summary = {
        "bulk_l1_rel": bulk_l1,
        "bulk_band": [0.1 * cap, 0.9 * cap],
        "window": [wa, wb],
        "window_empirical_share": empirical_share,
        "window_exact_share": exact_share,
        "window_rel_error": abs(empirical_share - exact_share) / exact_share
        if exact_share
        else math.inf,
        "alpha": alpha,
        "alpha_h0": cap,
        "curve_t": t_grid,
        "curve_empirical": scaled,
        "curve_continuum": continuum,
        "mean_num_layers": float(np.mean([r["num_layers"] for r in records])),
    }
    cfg = _base_config(
        seed, density, n=n, trials=trials, alpha=alpha, window=list(window),
        mode="iid",
    )
    return ExperimentReport("layer_counts", cfg, records, summary)


def exp_boundary_layer(
    density: RadialDensity,
    n: int,
    trials: int,
    seed: int = 0,
    threads: int | None = None,
    factor: float = 1.2,
    depth: int = 20,
) -> ExperimentReport:
    """Mean populations of the outermost layers.

    The continuum law predicts the first layers hold comparable counts; an
    excess of layer 1 over the next few flags the boundary effect.  Scaling
    conclusions need n at or above 1e4; smaller clouds still report.
    """
    if trials < 1:
        raise ValueError("at least one trial required")
    n = int(n)

    def one(t: int) -> dict:
        cloud = sample(SamplerSpec("iid", n, density, seed), trial=t)
        t0 = time.perf_counter()
        lay = peel(cloud)
        counts = lay.layer_counts()
        rec = {"trial": t, "n": n, "num_layers": int(len(counts))}
        for k in range(depth):
            rec[f"layer_{k + 1}"] = int(counts[k]) if k < len(counts) else 0
        rec["wall_ms"] = (time.perf_counter() - t0) * 1000.0
        return rec

    records = _map_ordered(one, [(t,) for t in range(trials)], _nthreads(threads))
    mean_counts = [
        float(np.mean([r[f"layer_{k + 1}"] for r in records])) for k in range(depth)
    ]
    inner = mean_counts[1:5]
    inner_mean = float(np.mean([v for v in inner if v > 0] or [0.0]))
    summary = {
        "mean_counts": mean_counts,
        "layer1_mean": mean_counts[0],
        "layer2_mean": mean_counts[1] if depth > 1 else 0.0,
        "inner_mean_2_5": inner_mean,
        "ratio": mean_counts[0] / inner_mean if inner_mean else math.inf,
        "factor": factor,
        "boundary_layer_detected": inner_mean > 0
        and mean_counts[0] > factor * inner_mean,
    }
    cfg = _base_config(
        seed, density, n=n, trials=trials, factor=factor, depth=depth, mode="iid"
    )
    return ExperimentReport("boundary_layer", cfg, records, summary)


def _child_seed(seed: int, *path: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(i) for i in path))
    return int(ss.generate_state(1, np.uint64)[0])


def _alpha_maxdepth(
    n_schedule=(1000, 3162, 10000, 31623, 100000),
    trials: int = 20,
    seed: int = 0,
    threads: int | None = None,
    use_extrapolation: bool = True,
) -> tuple[AlphaEstimate, ExperimentReport]:
    if trials < 2:
        raise ValueError("point estimates need at least two trials")
    rep = exp_max_depth_scaling(n_schedule, trials, seed=seed, threads=threads)
    s = rep.summary
    if use_extrapolation:
        est = AlphaEstimate(
            s["alpha_extrapolated"],
            max(s["alpha_extrapolated_stderr"], s["alpha_sem_by_n"][-1]),
            trials * len(s["n"]),
            float(s["n"][-1]),
            "maxdepth",
        )
    else:
        est = AlphaEstimate(
            s["alpha_largest_n"],
            s["alpha_largest_n_stderr"],
            trials,
            float(s["n"][-1]),
            "maxdepth",
        )
    return est, rep


def _alpha_profile(
    m: float = 1e5,
    trials: int = 20,
    seed: int = 0,
    grid: float = 0.02,
    density: RadialDensity | None = None,
    threads: int | None = None,
) -> tuple[AlphaEstimate, ExperimentReport]:
    if trials < 2:
        raise ValueError("point estimates need at least two trials")
    density = density or RadialDensity("uniform_ball")
    queries, hvals = shape_grid(density, grid)
    e = 2.0 / (density.dim + 1)
    denom = float(hvals @ hvals)

    def one(t: int) -> dict:
        cloud = sample(SamplerSpec("poisson", float(m), density, seed), trial=t)
        t0 = time.perf_counter()
        if len(cloud) == 0:
            a_t = 0.0
        else:
            lay = peel(cloud)
            hq = heights(lay, queries).astype(np.float64)
            a_t = float((float(m) ** (-e) * hq) @ hvals / denom)
        return {
            "trial": t,
            "m": float(m),
            "alpha_trial": a_t,
            "n_points": len(cloud),
            "wall_ms": (time.perf_counter() - t0) * 1000.0,
        }

    records = _map_ordered(one, [(t,) for t in range(trials)], _nthreads(threads))
    vals = np.array([r["alpha_trial"] for r in records])
    est = AlphaEstimate(
        float(vals.mean()),
        float(vals.std(ddof=1) / math.sqrt(trials)),
        trials,
        float(m),
        "profile",
    )
    cfg = _base_config(seed, density, m=float(m), trials=trials, grid=grid)
    rep = ExperimentReport(
        "alpha_profile",
        cfg,
        records,
        {"alpha_hat": est.alpha_hat, "stderr": est.stderr},
    )
    return est, rep


def _alpha_cell(
    r_schedule=(20.0, 40.0, 80.0),
    beta: float = 3.0,
    trials: int = 40,
    seed: int = 0,
    threads: int | None = None,
    wall_pitch: float | None = None,
) -> tuple[AlphaEstimate, ExperimentReport]:
    if trials < 2:
        raise ValueError("point estimates need at least two trials")
    rs = [float(r) for r in r_schedule]
    records: list = []
    ests: list[AlphaEstimate] = []
    for i, r in enumerate(rs):
        res = cell_estimate(
            r,
            beta=beta,
            trials=trials,
            seed=_child_seed(seed, 7, i),
            wall_pitch=wall_pitch,
            threads=threads,
            sensitivity=False,
        )
        ests.append(res.estimate)
        records.extend(res.records)
    # window-size drift fades like r^(-1/2); weighted intercept at r = inf
    x = np.array([r ** (-0.5) for r in rs])
    y = np.array([e.alpha_hat for e in ests])
    w = np.array([1.0 / max(e.stderr, 1e-12) ** 2 for e in ests])
    design = np.column_stack([x, np.ones(len(x))]) * np.sqrt(w)[:, None]
    coef, *_ = np.linalg.lstsq(design, y * np.sqrt(w), rcond=None)
    cov = np.linalg.inv(design.T @ design)
    a_inf = float(coef[1])
    se_inf = float(math.sqrt(cov[1, 1]))
    est = AlphaEstimate(a_inf, se_inf, trials * len(rs), rs[-1], "cell")
    summary = {
        "r": rs,
        "alpha_by_r": [e.alpha_hat for e in ests],
        "stderr_by_r": [e.stderr for e in ests],
        "alpha_hat": a_inf,
        "stderr": se_inf,
        "beta": beta,
    }
    cfg = _base_config(
        seed,
        RadialDensity("uniform_ball"),
        r_schedule=rs,
        beta=beta,
        trials=trials,
        wall_pitch=wall_pitch,
        note="density unused; cell clouds are unit Poisson on the window",
    )
    return est, ExperimentReport("alpha_cell", cfg, records, summary)


_ALPHA_ROUTES = {
    "cell": _alpha_cell,
    "maxdepth": _alpha_maxdepth,
    "profile": _alpha_profile,
}


def alpha_report(route: str, **params) -> tuple[AlphaEstimate, ExperimentReport]:
    """Depth-rate estimate plus the full experiment report for one route."""
    if route not in _ALPHA_ROUTES:
        raise ValueError(f"route must be one of {sorted(_ALPHA_ROUTES)}")
    return _ALPHA_ROUTES[route](**params)


def estimate_alpha(route: str, **params) -> AlphaEstimate:
    """Depth-rate estimate by window cell, depth scaling, or profile fit."""
    return alpha_report(route, **params)[0]


def cross_route_report(estimates) -> dict:
    """Pairwise agreement of route estimates at two combined standard errors."""
    rows = []
    es = list(estimates)
    for i in range(len(es)):
        for j in range(i + 1, len(es)):
            a, b = es[i], es[j]
            gap = abs(a.alpha_hat - b.alpha_hat)
            combined = math.hypot(a.stderr, b.stderr)
            rows.append(
                {
                    "route_a": a.route,
                    "route_b": b.route,
                    "gap": gap,
                    "combined_stderr": combined,
                    "consistent": bool(gap < 2 * combined) if combined > 0 else True,
                }
            )
    return {
        "estimates": [
            {
                "route": e.route,
                "alpha_hat": e.alpha_hat,
                "stderr": e.stderr,
                "trials": e.trials,
                "r": e.r,
            }
            for e in es
        ],
        "pairs": rows,
    }

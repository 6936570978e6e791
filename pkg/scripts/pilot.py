"""Calibration runs behind the frozen acceptance thresholds.

Each stage replays with the recorded seed; the printed values are the ones
frozen into tests/test_acceptance.py.  Run from the repository root:

    python3 scripts/pilot.py [stage ...]

with stages from: maxdepth profile cell shape counts boundary suites.
"""

from __future__ import annotations

import sys
import time

from hullpeel.checks import DEFAULT_SEED, run_verify
from hullpeel.experiments import alpha_report, exp_boundary_layer, exp_layer_counts, exp_limit_shape
from hullpeel.limits import RadialDensity, h_radial

BALL = RadialDensity("uniform_ball")
GAUSS = RadialDensity("gaussian")


def _stage(name):
    print(f"--- {name} (seed {DEFAULT_SEED}) ---", flush=True)
    return time.perf_counter()


def _done(t0):
    print(f"    elapsed {time.perf_counter() - t0:.1f}s", flush=True)


def stage_maxdepth():
    t0 = _stage("maxdepth")
    est, rep = alpha_report(
        "maxdepth",
        n_schedule=[1000, 3162, 10000, 31623, 100000],
        trials=20,
        seed=DEFAULT_SEED,
    )
    s = rep.summary
    print(f"alpha_hat {est.alpha_hat:.6f} stderr {est.stderr:.6f}")
    print(f"alpha_largest_n {s['alpha_largest_n']:.6f} +- {s['alpha_largest_n_stderr']:.6f}")
    print(f"alpha_by_n {[round(a, 4) for a in s['alpha_by_n']]}")
    print(f"slope {s['slope']:.6f} stderr {s['slope_stderr']:.6f}")
    _done(t0)
    return est


def stage_profile():
    t0 = _stage("profile")
    est, _ = alpha_report("profile", m=1e5, trials=20, seed=DEFAULT_SEED)
    print(f"alpha_hat {est.alpha_hat:.6f} stderr {est.stderr:.6f}")
    _done(t0)
    return est


def stage_cell():
    t0 = _stage("cell")
    est, rep = alpha_report(
        "cell", r_schedule=[20.0, 40.0, 80.0], trials=200, seed=DEFAULT_SEED
    )
    s = rep.summary
    print(f"alpha_hat {est.alpha_hat:.6f} stderr {est.stderr:.6f}")
    print(f"alpha_by_r {[round(a, 4) for a in s['alpha_by_r']]}")
    print(f"stderr_by_r {[round(a, 5) for a in s['stderr_by_r']]}")
    _done(t0)
    return est


def stage_shape():
    t0 = _stage("shape")
    rep = exp_limit_shape(
        BALL, [1000, 10000, 100000], trials=20, alpha=4.0 / 3.0, grid=0.02,
        seed=DEFAULT_SEED,
    )
    med = rep.summary["median_sup_error"]
    cap = rep.summary["alpha_h0"]
    print(f"alpha_h0 {cap:.6f}")
    print(f"median_sup_error {[round(v, 5) for v in med]}")
    print(f"relative_to_cap {[round(v / cap, 4) for v in med]}")
    _done(t0)


def stage_counts():
    t0 = _stage("counts")
    for tag, dens in (("ball", BALL), ("gaussian", GAUSS)):
        rep = exp_layer_counts(dens, 100000, trials=10, alpha=4.0 / 3.0, seed=DEFAULT_SEED)
        s = rep.summary
        print(
            f"{tag}: bulk_l1_rel {s['bulk_l1_rel']:.5f} "
            f"window_rel_error {s['window_rel_error']:.5f} "
            f"mean_num_layers {s['mean_num_layers']:.1f}"
        )
    _done(t0)


def stage_boundary():
    t0 = _stage("boundary")
    rep = exp_boundary_layer(BALL, 100000, trials=100, seed=DEFAULT_SEED)
    s = rep.summary
    print(
        f"layer1_mean {s['layer1_mean']:.3f} layer2_mean {s['layer2_mean']:.3f} "
        f"ratio {s['ratio']:.3f} detected {s['boundary_layer_detected']}"
    )
    _done(t0)


def stage_suites():
    t0 = _stage("suites: game identities and invariances")
    for res in run_verify(
        ["dpp", "semidpp", "affine", "monotone", "correspondence"], seed=DEFAULT_SEED
    ):
        print(f"suite {res.name}: {'ok' if res.ok else 'FAIL'}")
    _done(t0)
    t0 = _stage("suites: operator, barrier, quadrature")
    for res in run_verify(["F", "barrier", "quadrature"], seed=DEFAULT_SEED):
        print(f"suite {res.name}: {'ok' if res.ok else 'FAIL'}")
    _done(t0)


STAGES = {
    "maxdepth": stage_maxdepth,
    "profile": stage_profile,
    "cell": stage_cell,
    "shape": stage_shape,
    "counts": stage_counts,
    "boundary": stage_boundary,
    "suites": stage_suites,
}


def main() -> int:
    names = sys.argv[1:] or list(STAGES)
    t0 = time.perf_counter()
    for name in names:
        STAGES[name]()
    print(f"total {time.perf_counter() - t0:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())

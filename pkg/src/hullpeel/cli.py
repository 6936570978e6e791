"""Command-line surface for peeling, sampling, and the experiment reports.

Exit codes: 0 on success, 1 on usage or input errors, 2 when a verification
suite fails.  Flags override config-file entries, which override defaults;
the effective configuration is echoed into every report.  The environment
variable HULLPEEL_OUT names a default output directory for relative paths.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .checks import DEFAULT_SEED, run_verify
from .experiments import (
    alpha_report,
    cross_route_report,
    exp_boundary_layer,
    exp_layer_counts,
    exp_limit_shape,
)
from .geometry import read_points_csv, write_points_csv
from .limits import RadialDensity
from .peeling import layering_to_csv, peel
from .render import write_svg
from .sampling import SamplerSpec, sample
from .semiconvex import cell_estimate

_ROUTES = ("maxdepth", "profile", "cell")


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage problems with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _out_path(flag: str | None, default_name: str) -> str:
    """Resolve an output path against --out and HULLPEEL_OUT."""
    path = flag if flag else default_name
    base = os.environ.get("HULLPEEL_OUT")
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return path


def _read_config(path: str) -> dict:
    """Flat key=value (or key: value) file with # comments."""
    entries: dict = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, val = line.split("=", 1)
            elif ":" in line:
                key, val = line.split(":", 1)
            else:
                raise ValueError(f"config line {line!r} is not key=value")
            entries[key.strip()] = val.strip()
    return entries


def _density_from_args(args) -> RadialDensity:
    entries = _read_config(args.density) if getattr(args, "density", None) else {}
    if args.dim is not None:
        entries["dim"] = args.dim
    entries.setdefault("kind", "uniform_ball")
    return RadialDensity.from_config(entries)


def _schedule(text: str, integer: bool = False) -> list:
    """Parse 'lo:hi:k' as k log-spaced values, else a comma list."""
    if ":" in text:
        lo_s, hi_s, k_s = text.split(":")
        lo, hi, k = float(lo_s), float(hi_s), int(k_s)
        if k < 2 or lo <= 0 or hi <= lo:
            raise ValueError(f"bad schedule {text!r}")
        ratio = (hi / lo) ** (1.0 / (k - 1))
        vals = [lo * ratio**i for i in range(k)]
    else:
        vals = [float(v) for v in text.split(",") if v.strip()]
    if not vals:
        raise ValueError("empty schedule")
    return [int(round(v)) for v in vals] if integer else vals


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True, default=str))
        fh.write("\n")


def _emit_report(report, args, default_name: str) -> str:
    if args.format == "csv":
        path = _out_path(args.out, default_name + ".csv")
        with open(path, "w", newline="") as fh:
            fh.write(report.records_csv())
    else:
        path = _out_path(args.out, default_name + ".json")
        with open(path, "w") as fh:
            fh.write(report.to_json())
            fh.write("\n")
    return path


def _add_common(p: argparse.ArgumentParser, fmt=("json", "csv")) -> None:
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=fmt, default=fmt[0])
    p.add_argument("--dim", type=int, choices=(2, 3), default=None)
    p.add_argument("--threads", type=int, default=None)


def _cmd_peel(args) -> int:
    points = read_points_csv(args.infile)
    if args.dim is not None and points.shape[1] != args.dim:
        raise ValueError(f"input has dimension {points.shape[1]}, expected {args.dim}")
    layering = peel(points, engine=args.engine)
    path = _out_path(args.out, "layers.csv")
    layering_to_csv(layering, path)
    print(f"wrote {path} ({layering.num_layers} layers, {len(points)} points)")
    if args.svg:
        svg_path = _out_path(args.svg, "layers.svg")
        write_svg(svg_path, layering, every=args.every)
        print(f"wrote {svg_path}")
    return 0


def _cmd_sample(args) -> int:
    density = _density_from_args(args)
    spec = SamplerSpec(args.mode, args.size, density, args.seed)
    cloud = sample(spec, args.trial)
    path = _out_path(args.out, "points.csv")
    write_points_csv(path, cloud)
    print(f"wrote {path} ({len(cloud)} points)")
    return 0


def _route_params(args, route: str) -> dict:
    params: dict = {"seed": args.seed, "trials": args.trials, "threads": args.threads}
    if route == "maxdepth":
        params["n_schedule"] = _schedule(args.n, integer=True)
    elif route == "profile":
        params["m"] = _schedule(args.m)[-1]
        params["grid"] = args.grid
    else:
        params["r_schedule"] = _schedule(args.r)
        params["beta"] = args.beta
        params["wall_pitch"] = args.wall_pitch
    return params


def _cmd_estimate_alpha(args) -> int:
    routes = _ROUTES if args.route == "all" else (args.route,)
    ests, reps = [], {}
    for route in routes:
        est, rep = alpha_report(route, **_route_params(args, route))
        ests.append(est)
        reps[route] = rep
        print(f"[{route}]")
        print(est.report())
    payload = {
        "alpha_hat": ests[-1].alpha_hat,
        "stderr": ests[-1].stderr,
        "routes": {
            r: {"report": json.loads(reps[r].to_json()), "alpha_hat": e.alpha_hat}
            for r, e in zip(routes, ests)
        },
    }
    if len(ests) > 1:
        payload["cross_route"] = cross_route_report(ests)
    if args.format == "csv":
        path = _out_path(args.out, "alpha.csv")
        with open(path, "w", newline="") as fh:
            fh.write(reps[routes[-1]].records_csv())
    else:
        path = _out_path(args.out, "alpha.json")
        _write_json(path, payload)
    print(f"wrote {path}")
    return 0


def _cmd_limit_shape(args) -> int:
    density = _density_from_args(args)
    report = exp_limit_shape(
        density,
        _schedule(args.m, integer=True),
        args.trials,
        alpha=args.alpha,
        grid=args.grid,
        seed=args.seed,
        threads=args.threads,
    )
    path = _emit_report(report, args, "limit_shape")
    print(f"wrote {path}")
    print(f"median sup errors: {report.summary['median_sup_error']}")
    return 0


def _cmd_layer_counts(args) -> int:
    density = _density_from_args(args)
    lo, hi = (float(v) for v in args.window.split(","))
    report = exp_layer_counts(
        density,
        args.n,
        args.trials,
        alpha=args.alpha,
        seed=args.seed,
        threads=args.threads,
        window=(lo, hi),
    )
    path = _emit_report(report, args, "layer_counts")
    print(f"wrote {path}")
    print(f"bulk relative L1: {report.summary['bulk_l1_rel']:.4f}")
    return 0


def _cmd_boundary_layer(args) -> int:
    density = _density_from_args(args)
    report = exp_boundary_layer(
        density,
        args.n,
        args.trials,
        seed=args.seed,
        threads=args.threads,
        factor=args.factor,
    )
    path = _emit_report(report, args, "boundary_layer")
    print(f"wrote {path}")
    s = report.summary
    print(
        f"layer 1 mean {s['layer1_mean']:.1f} vs layer 2 mean "
        f"{s['layer2_mean']:.1f} (detected: {s['boundary_layer_detected']})"
    )
    return 0


def _cmd_verify(args) -> int:
    suites = [s.strip() for s in args.suite.split(",")] if args.suite else None
    results = run_verify(suites, cases=args.cases, n=args.n, seed=args.seed)
    failed = False
    payload = []
    for res in results:
        print(f"suite {res.name}: {'ok' if res.ok else 'FAIL'}")
        if not res.ok:
            failed = True
            if res.counterexample is not None:
                print(json.dumps(res.counterexample, default=str))
        payload.append(
            {"suite": res.name, "ok": res.ok, "counterexample": res.counterexample}
        )
    if args.out:
        _write_json(_out_path(args.out, "verify.json"), {"results": payload})
    return 2 if failed else 0


def _cmd_cell(args) -> int:
    result = cell_estimate(
        args.r,
        beta=args.beta,
        trials=args.trials,
        seed=args.seed,
        wall_pitch=args.wall_pitch,
        offset=args.offset,
        threads=args.threads,
        sensitivity=not args.no_sensitivity,
    )
    print(result.estimate.report())
    if result.sensitivity is not None:
        tag = "consistent" if result.sensitivity["consistent"] else "INCONSISTENT"
        print(
            f"widening sensitivity: {result.sensitivity['alpha_hat_beta']:.4f} vs "
            f"{result.sensitivity['alpha_hat_beta_plus_1']:.4f} ({tag})"
        )
    fields = ("trial", "r", "beta", "s_value", "n_points", "wall_ms")
    if args.format == "csv":
        path = _out_path(args.out, "cell.csv")
        lines = [",".join(fields)]
        for rec in result.records:
            lines.append(
                ",".join(
                    repr(v) if isinstance(v, float) else str(v)
                    for v in (rec[k] for k in fields)
                )
            )
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    else:
        path = _out_path(args.out, "cell.json")
        _write_json(
            path,
            {
                "estimate": {
                    "alpha_hat": result.estimate.alpha_hat,
                    "stderr": result.estimate.stderr,
                    "trials": result.estimate.trials,
                    "r": result.estimate.r,
                    "route": result.estimate.route,
                },
                "sensitivity": result.sensitivity,
                "records": result.records,
            },
        )
    print(f"wrote {path}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="hullpeel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("peel", help="peel a point cloud from CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--engine", choices=("auto", "fast", "exact"), default="auto")
    p.add_argument("--svg", default=None)
    p.add_argument("--every", type=int, default=None)
    _add_common(p, fmt=("csv",))
    p.set_defaults(fn=_cmd_peel)

    p = sub.add_parser("sample", help="draw a cloud from a density")
    p.add_argument("--mode", choices=("poisson", "iid"), default="poisson")
    p.add_argument("--size", type=float, required=True)
    p.add_argument("--density", default=None, help="config file for the density")
    p.add_argument("--trial", type=int, default=0)
    _add_common(p, fmt=("csv",))
    p.set_defaults(fn=_cmd_sample)

    p = sub.add_parser("estimate-alpha", help="depth-rate constant by route")
    p.add_argument("--route", choices=_ROUTES + ("all",), default="maxdepth")
    p.add_argument("--n", default="1e3:1e5:5", help="cloud-size schedule")
    p.add_argument("--m", default="1e5", help="profile-route intensity")
    p.add_argument("--r", default="20,40,80", help="cell-route window schedule")
    p.add_argument("--beta", type=float, default=3.0)
    p.add_argument("--wall-pitch", type=float, nargs="?", const=0.25, default=None)
    p.add_argument("--grid", type=float, default=0.02)
    p.add_argument("--trials", type=int, default=20)
    _add_common(p)
    p.set_defaults(fn=_cmd_estimate_alpha)

    p = sub.add_parser("limit-shape", help="rescaled height vs the exact profile")
    p.add_argument("--m", default="1e3,1e4,1e5", help="intensity schedule")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--alpha", type=float, default=4.0 / 3.0)
    p.add_argument("--grid", type=float, default=0.02)
    p.add_argument("--density", default=None)
    _add_common(p)
    p.set_defaults(fn=_cmd_limit_shape)

    p = sub.add_parser("layer-counts", help="layer histogram vs the continuum law")
    p.add_argument("--n", type=int, default=100000)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--alpha", type=float, default=4.0 / 3.0)
    p.add_argument("--window", default="0.2,0.6")
    p.add_argument("--density", default=None)
    _add_common(p)
    p.set_defaults(fn=_cmd_layer_counts)

    p = sub.add_parser("boundary-layer", help="outermost-layer population excess")
    p.add_argument("--n", type=int, default=100000)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--factor", type=float, default=1.2)
    p.add_argument("--density", default=None)
    _add_common(p)
    p.set_defaults(fn=_cmd_boundary_layer)

    p = sub.add_parser("verify", help="run the property suites")
    p.add_argument("--suite", default=None, help="comma list (default: all)")
    p.add_argument("--cases", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    _add_common(p)
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("cell", help="cell-problem estimate at one window size")
    p.add_argument("--r", type=float, default=20.0)
    p.add_argument("--beta", type=float, default=3.0)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--wall-pitch", type=float, nargs="?", const=0.25, default=None)
    p.add_argument("--offset", type=float, default=0.0)
    p.add_argument("--no-sensitivity", action="store_true")
    _add_common(p)
    p.set_defaults(fn=_cmd_cell)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "fn"):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"hullpeel: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

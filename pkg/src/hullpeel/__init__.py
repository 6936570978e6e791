"""Convex hull peeling, its half-space analogue, and their continuum limit.

Peeling strips the convex hull boundary of a point cloud over and over; the
layer index of a point, rescaled by n^(2/(d+1)), approaches a profile
solving a degenerate elliptic equation driven by the sampling density.
This package bundles exact and compiled peeling engines, the closed-form
profiles for the classical densities, seeded Monte Carlo experiments that
recover the scaling law and the depth-rate constant, and exact property
suites for the game-theoretic characterizations.
"""

from .geometry import (
    AffineMap,
    affine_apply,
    as_float_array,
    convex_hull,
    hull_boundary_2d,
    hull_vertices_2d,
    is_exact,
    lower_hull,
    orient2d,
    orientation,
    read_points_csv,
    to_exact,
    write_points_csv,
)
from .peeling import (
    CheckResult,
    ConvexLayering,
    check_affine_invariance,
    height,
    heights,
    layer_counts,
    layering_to_csv,
    max_depth,
    peel,
    verify_dpp,
)
from .semiconvex import (
    AlphaEstimate,
    CellEstimateResult,
    Cylinder,
    Parabola,
    SemiconvexLayering,
    cell_estimate,
    correspondence_check,
    lift,
    periodize,
    project,
    s_height,
    s_heights,
    semiconvex_first_layer,
    semiconvex_peel,
    sentinel_stack,
    verify_semidpp,
)
from .limits import (
    F,
    RadialDensity,
    SimpleTestFunction,
    barrier_check,
    barrier_psi,
    h_affine,
    h_radial,
    h_radial_quad,
    N_of_t,
    N_of_t_generic,
    radial_mass,
    simple_test_function,
    unit_ball_volume,
    write_profile_csv,
)
from .sampling import (
    RNG_ALGORITHM,
    SamplerSpec,
    poisson_rectangle,
    sample,
    trial_rng,
)
from .experiments import (
    ExperimentReport,
    alpha_report,
    cross_route_report,
    estimate_alpha,
    exp_boundary_layer,
    exp_layer_counts,
    exp_limit_shape,
    exp_max_depth_scaling,
    shape_grid,
)
from .checks import SUITES, SuiteResult, run_verify
from .render import layer_indices, layering_svg, write_svg

__version__ = "0.1.0"

__all__ = [
    "AffineMap",
    "AlphaEstimate",
    "CellEstimateResult",
    "CheckResult",
    "ConvexLayering",
    "Cylinder",
    "ExperimentReport",
    "F",
    "N_of_t",
    "N_of_t_generic",
    "Parabola",
    "RNG_ALGORITHM",
    "RadialDensity",
    "SUITES",
    "SamplerSpec",
    "SemiconvexLayering",
    "SimpleTestFunction",
    "SuiteResult",
    "affine_apply",
    "alpha_report",
    "as_float_array",
    "barrier_check",
    "barrier_psi",
    "cell_estimate",
    "check_affine_invariance",
    "convex_hull",
    "correspondence_check",
    "cross_route_report",
    "estimate_alpha",
    "exp_boundary_layer",
    "exp_layer_counts",
    "exp_limit_shape",
    "exp_max_depth_scaling",
    "h_affine",
    "h_radial",
    "h_radial_quad",
    "height",
    "heights",
    "hull_boundary_2d",
    "hull_vertices_2d",
    "is_exact",
    "layer_counts",
    "layer_indices",
    "layering_svg",
    "layering_to_csv",
    "lift",
    "lower_hull",
    "max_depth",
    "orient2d",
    "orientation",
    "peel",
    "periodize",
    "poisson_rectangle",
    "project",
    "radial_mass",
    "read_points_csv",
    "run_verify",
    "s_height",
    "s_heights",
    "sample",
    "semiconvex_first_layer",
    "semiconvex_peel",
    "sentinel_stack",
    "shape_grid",
    "simple_test_function",
    "to_exact",
    "trial_rng",
    "unit_ball_volume",
    "verify_dpp",
    "verify_semidpp",
    "write_points_csv",
    "write_profile_csv",
    "write_svg",
]

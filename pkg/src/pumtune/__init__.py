"""Scattered-data RBF interpolation with a tuned partition of unity.

The domain is split into overlapping balls on a regular center grid; each
ball gets its own radial-kernel interpolant whose shape parameter and radius
are tuned either by exhaustive leave-one-out grid search or by Bayesian
optimization with a Gaussian-process surrogate and Expected Improvement.
"""

from .bayesopt import (
    BoConfig,
    BoResult,
    GpModel,
    bo_minimize,
    expected_improvement,
    gp_fit,
    gp_predict,
    propose_next,
)
from .errors import (
    EmptySubdomain,
    InsufficientPoints,
    PumtuneError,
    SingularSystem,
    UncoveredPoint,
)
from .geometry import (
    CenterGrid,
    PointSet,
    Subdomain,
    build_center_grid,
    compute_delta_min,
    generate_uniform_points,
    load_points_csv,
    points_in_ball,
    save_points_csv,
)
from .harness import (
    ExperimentConfig,
    ResultRow,
    bo_objective_for_subdomain,
    emit_results,
    run_bench,
    run_bo_pum,
    run_fixed_pum,
    run_loocv_pum,
    split_subdomain,
)
from .kernels import (
    RadialKernel,
    SpdFactorization,
    inverse_diagonal,
    kernel_matrix,
    kernel_value,
    solve_spd,
)
from .loocv import (
    GridSpec,
    SearchBox,
    TuneResult,
    grid_search,
    loocv_criterion,
    rippa_errors,
)
from .pum import (
    LocalModel,
    PuInterpolant,
    bump_weight,
    evaluate,
    fit_local,
    franke_like_test_function,
    max_abs_error,
    shepard_weights,
)

__version__ = "0.1.0"

__all__ = [
    "BoConfig",
    "BoResult",
    "CenterGrid",
    "EmptySubdomain",
    "ExperimentConfig",
    "GpModel",
    "GridSpec",
    "InsufficientPoints",
    "LocalModel",
    "PointSet",
    "PuInterpolant",
    "PumtuneError",
    "RadialKernel",
    "ResultRow",
    "SearchBox",
    "SingularSystem",
    "SpdFactorization",
    "Subdomain",
    "TuneResult",
    "UncoveredPoint",
    "bo_minimize",
    "bo_objective_for_subdomain",
    "build_center_grid",
    "bump_weight",
    "compute_delta_min",
    "emit_results",
    "evaluate",
    "expected_improvement",
    "fit_local",
    "franke_like_test_function",
    "generate_uniform_points",
    "gp_fit",
    "gp_predict",
    "grid_search",
    "inverse_diagonal",
    "kernel_matrix",
    "kernel_value",
    "load_points_csv",
    "loocv_criterion",
    "max_abs_error",
    "points_in_ball",
    "propose_next",
    "rippa_errors",
    "run_bench",
    "run_bo_pum",
    "run_fixed_pum",
    "run_loocv_pum",
    "save_points_csv",
    "shepard_weights",
    "solve_spd",
    "split_subdomain",
]

from ._core import (
    BlowUpError,
    BoundaryGeometry,
    BoundaryMap,
    ConfigError,
    Domain,
    Grid,
    HypothesisReport,
    PreconditionError,
    UndercoverageError,
    boundary_gradient_bound,
    build_grid,
    check_condition_A,
    check_condition_B,
    delta0,
    estimate_c0_eta0,
    gaussian_density,
    mss_residual,
    run_config,
    shrinker_residual,
    singular_values,
    solve,
    star_omega,
)

__all__ = [
    "BlowUpError",
    "BoundaryGeometry",
    "BoundaryMap",
    "ConfigError",
    "Domain",
    "Grid",
    "HypothesisReport",
    "PreconditionError",
    "UndercoverageError",
    "boundary_gradient_bound",
    "build_grid",
    "check_condition_A",
    "check_condition_B",
    "delta0",
    "estimate_c0_eta0",
    "gaussian_density",
    "mss_residual",
    "run_config",
    "shrinker_residual",
    "singular_values",
    "solve",
    "star_omega",
]

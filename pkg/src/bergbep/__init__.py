"""Constrained analytic approximation in Bergman and Bergman-Vekua spaces."""

from .bep import (
    BepProblem,
    BepSolution,
    ConvergenceError,
    InfeasibleProblemError,
    constraint_error,
    feasibility_distance,
    solve_at_lambda,
    solve_bep,
    solve_bep_oracle,
)
from .bergman import (
    AnalyticCoeffs,
    GramMatrix,
    basis_matrix,
    gram,
    gram_quadrature,
    kernel_eval,
    kernel_project_eval,
    project,
    spectrum,
)
from .fbep import (
    FbepProblem,
    FbepSolution,
    build_fbep_space,
    directional_kkt_check,
    fbep_conjecture_check,
    restriction_map_norm,
    solve_fbep,
    transformed_constraint_data,
)
from .grid import (
    DiscGrid,
    GridFunction,
    GridMismatchError,
    Region,
    build_grid,
    eval_basis,
    glue,
    inner_product,
)
from .vekua import (
    Conductivity,
    LiftDivergenceError,
    VekuaBasis,
    VekuaFunction,
    alpha_from_f,
    beltrami_residual,
    dbar,
    dz,
    invariance_defect,
    laplacian_residual,
    metaharmonic_residuals,
    pf_restricted,
    similarity_factor,
    teodorescu,
    vekua_lift,
    vekua_residual,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticCoeffs",
    "BepProblem",
    "BepSolution",
    "Conductivity",
    "ConvergenceError",
    "DiscGrid",
    "FbepProblem",
    "FbepSolution",
    "GramMatrix",
    "GridFunction",
    "GridMismatchError",
    "InfeasibleProblemError",
    "LiftDivergenceError",
    "Region",
    "VekuaBasis",
    "VekuaFunction",
    "alpha_from_f",
    "basis_matrix",
    "beltrami_residual",
    "build_fbep_space",
    "build_grid",
    "constraint_error",
    "dbar",
    "directional_kkt_check",
    "dz",
    "eval_basis",
    "fbep_conjecture_check",
    "feasibility_distance",
    "glue",
    "gram",
    "gram_quadrature",
    "inner_product",
    "invariance_defect",
    "kernel_eval",
    "kernel_project_eval",
    "laplacian_residual",
    "metaharmonic_residuals",
    "pf_restricted",
    "project",
    "restriction_map_norm",
    "similarity_factor",
    "solve_at_lambda",
    "solve_bep",
    "solve_bep_oracle",
    "solve_fbep",
    "spectrum",
    "teodorescu",
    "transformed_constraint_data",
    "vekua_lift",
    "vekua_residual",
]

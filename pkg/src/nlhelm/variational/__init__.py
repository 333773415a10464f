"""Dual functional, mountain-pass search and solution reconstruction."""
from nlhelm.variational.dual_functional import (
    DualPair,
    InnerSolveReport,
    eval_J,
    eval_reduced,
    grad_phi,
    grad_psi,
    grad_reduced,
    solve_Z,
)
from nlhelm.variational.mountain_pass import (
    MpOptions,
    MpPath,
    MpResult,
    find_critical_point,
    lambda_sweep,
    make_endpoint,
    sphere_infimum_bound,
)
from nlhelm.variational.reconstruction import (
    SolutionRecord,
    build_u,
    reconstruct,
    rescale_to_k,
    residual_integral,
    residual_pde,
)

__all__ = [
    "DualPair",
    "InnerSolveReport",
    "MpOptions",
    "MpPath",
    "MpResult",
    "SolutionRecord",
    "build_u",
    "eval_J",
    "eval_reduced",
    "find_critical_point",
    "grad_phi",
    "grad_psi",
    "grad_reduced",
    "lambda_sweep",
    "make_endpoint",
    "reconstruct",
    "rescale_to_k",
    "residual_integral",
    "residual_pde",
    "solve_Z",
    "sphere_infimum_bound",
]

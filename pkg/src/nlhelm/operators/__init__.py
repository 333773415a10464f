"""Resolvent and Birman-Schwinger operators on a grid."""
from nlhelm.operators.birman_schwinger import (
    MethodConstants,
    WeightedOperator,
    apply_K,
    check_negative_positivity,
    compute_alpha,
    compute_beta,
    compute_constants,
    lambda0,
    masked_matrix,
)
from nlhelm.operators.resolvent import ResolventOperator, apply_R, build, estimate_operator_norm

__all__ = [
    "MethodConstants",
    "ResolventOperator",
    "WeightedOperator",
    "apply_K",
    "apply_R",
    "build",
    "check_negative_positivity",
    "compute_alpha",
    "compute_beta",
    "compute_constants",
    "estimate_operator_norm",
    "lambda0",
    "masked_matrix",
]

"""Special functions, grids and field storage."""
from nlhelm.numerics.grid_field import (
    Grid,
    ScalarField,
    SupportMask,
    discrete_laplacian,
    dual_map,
    inner,
    lp_norm,
    mask_from_weight,
)
from nlhelm.numerics.special_functions import (
    BesselOrder,
    bessel_y,
    first_positive_zero_y,
    psi_kernel,
)

__all__ = [
    "BesselOrder",
    "Grid",
    "ScalarField",
    "SupportMask",
    "bessel_y",
    "discrete_laplacian",
    "dual_map",
    "first_positive_zero_y",
    "inner",
    "lp_norm",
    "mask_from_weight",
    "psi_kernel",
]

"""Weight profiles Q, presets and sign-region geometry."""
from nlhelm.weights.geometry import DiameterCriterion, GeometryReport, diameter_criterion, geometry_report
from nlhelm.weights.presets import WEIGHT_PRESETS, get_preset
from nlhelm.weights.profiles import (
    WEIGHT_KINDS,
    BallRing,
    FromFile,
    TwoBalls,
    WeightProfile,
    WeightSpec,
    get_weight_profile,
    realize,
)

__all__ = [
    "WEIGHT_KINDS",
    "WEIGHT_PRESETS",
    "BallRing",
    "DiameterCriterion",
    "FromFile",
    "GeometryReport",
    "TwoBalls",
    "WeightProfile",
    "WeightSpec",
    "diameter_criterion",
    "geometry_report",
    "get_preset",
    "get_weight_profile",
    "realize",
]

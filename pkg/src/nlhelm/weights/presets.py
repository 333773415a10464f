"""Named weight configurations selectable with ``weight.preset``."""
from __future__ import annotations

import copy
from typing import Any

from nlhelm.errors import DomainError

WEIGHT_PRESETS: dict[str, dict[str, Any]] = {
    "two_balls_2d": {
        "description": "Focusing ball left of a smaller defocusing ball (N=2)",
        "dimension": 2,
        "kind": "two_balls",
        "parameters": {
            "plus_center": (-1.2, 0.0),
            "plus_radius": 0.8,
            "minus_center": (1.2, 0.0),
            "minus_radius": 0.5,
        },
    },
    "focusing_2d": {
        "description": "Pure focusing control Q >= 0, beta = 0 (N=2)",
        "dimension": 2,
        "kind": "two_balls",
        "parameters": {
            "plus_center": (0.0, 0.0),
            "plus_radius": 1.0,
            "minus_amplitude": 0.0,
        },
    },
    "ring_2d": {
        "description": "Defocusing core inside a focusing annulus (N=2)",
        "dimension": 2,
        "kind": "ball_ring",
        "parameters": {
            "minus_radius": 0.5,
            "ring_inner": 1.0,
            "ring_outer": 1.6,
        },
    },
    "narrow_defocusing_3d": {
        "description": "Defocusing ball with diam(A_-) = 1.4 < pi/2 next to a focusing ball (N=3)",
        "dimension": 3,
        "kind": "two_balls",
        "parameters": {
            "plus_center": (-1.5, 0.0, 0.0),
            "plus_radius": 0.8,
            "minus_center": (1.2, 0.0, 0.0),
            "minus_radius": 0.7,
        },
    },
    "wide_defocusing_2d": {
        "description": "Defocusing disc of radius 6 in a thin focusing ring; fails positivity (N=2, L >= 16)",
        "dimension": 2,
        "kind": "ball_ring",
        "parameters": {
            "minus_radius": 6.0,
            "ring_inner": 6.5,
            "ring_outer": 7.5,
        },
    },
}


def get_preset(name: str) -> dict[str, Any]:
    """Deep copy of the preset ``name`` so callers may override its parameters."""
    preset = WEIGHT_PRESETS.get(name)
    if preset is None:
        raise DomainError(f"Unknown weight preset '{name}'. Available: {list(WEIGHT_PRESETS)}")
    return copy.deepcopy(preset)

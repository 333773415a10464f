"""Sign-changing weight profiles Q and their realization on a grid.

New profiles only need to implement the ``WeightProfile`` protocol and be
registered in ``_PROFILES``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Protocol, runtime_checkable

import numpy as np

from nlhelm.errors import DomainError
from nlhelm.numerics.grid_field import FloatArray, Grid, ScalarField, check_same_grid
from nlhelm.numerics.nlhf import read_field

logger = logging.getLogger(__name__)

# Built-in weights must vanish outside [-SUPPORT_FRACTION*L, SUPPORT_FRACTION*L)^N.
SUPPORT_FRACTION = 0.5


# ---------------------------------------------------------------------------
# Abstract interface
# ---------------------------------------------------------------------------
@runtime_checkable
class WeightProfile(Protocol):
    """Minimal contract every weight profile must satisfy."""

    def sample(self, grid: Grid) -> FloatArray:
        """Return Q at the grid nodes."""
        ...


def _center(center: tuple[float, ...] | None, grid: Grid, name: str) -> np.ndarray:
    if center is None:
        return np.zeros(grid.N)
    if len(center) != grid.N:
        raise DomainError(f"{name} has {len(center)} entries, grid dimension is {grid.N}")
    return np.asarray(center, dtype=np.float64)


def _ball(grid: Grid, center: np.ndarray, radius: float) -> np.ndarray:
    # Sharp indicator at the nodes.
    squared = sum((c - x0) ** 2 for c, x0 in zip(grid.coordinates(), center))
    return squared <= radius * radius


# ---------------------------------------------------------------------------
# Built-in profiles
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class TwoBalls:
    """Q = a_+ 1_{B(c_+, r_+)} - a_- 1_{B(c_-, r_-)} with disjoint closed balls."""

    plus_radius: float
    minus_radius: float = 0.0
    plus_center: tuple[float, ...] | None = None
    minus_center: tuple[float, ...] | None = None
    plus_amplitude: float = 1.0
    minus_amplitude: float = 1.0

    def __post_init__(self) -> None:
        if not self.plus_radius > 0 or self.minus_radius < 0:
            raise DomainError("two_balls needs plus_radius > 0 and minus_radius >= 0")
        if self.plus_amplitude <= 0 or self.minus_amplitude < 0:
            raise DomainError("two_balls needs plus_amplitude > 0 and minus_amplitude >= 0")

    @property
    def has_minus(self) -> bool:
        return self.minus_amplitude > 0 and self.minus_radius > 0

    def sample(self, grid: Grid) -> FloatArray:
        c_plus = _center(self.plus_center, grid, "plus_center")
        q = self.plus_amplitude * _ball(grid, c_plus, self.plus_radius).astype(np.float64)
        if self.has_minus:
            c_minus = _center(self.minus_center, grid, "minus_center")
            gap = float(np.linalg.norm(c_plus - c_minus))
            if gap <= self.plus_radius + self.minus_radius:
                raise DomainError(
                    f"two_balls balls overlap: |c_+ - c_-| = {gap:g} <= r_+ + r_- = "
                    f"{self.plus_radius + self.minus_radius:g}"
                )
            q -= self.minus_amplitude * _ball(grid, c_minus, self.minus_radius)
        return q


@dataclass(frozen=True)
class BallRing:
    """Defocusing ball of radius ``minus_radius`` inside a focusing annulus."""

    minus_radius: float
    ring_inner: float
    ring_outer: float
    center: tuple[float, ...] | None = None
    plus_amplitude: float = 1.0
    minus_amplitude: float = 1.0

    def __post_init__(self) -> None:
        if not 0 <= self.minus_radius < self.ring_inner < self.ring_outer:
            raise DomainError(
                "ball_ring needs 0 <= minus_radius < ring_inner < ring_outer, got "
                f"{self.minus_radius}, {self.ring_inner}, {self.ring_outer}"
            )
        if self.plus_amplitude <= 0 or self.minus_amplitude < 0:
            raise DomainError("ball_ring needs plus_amplitude > 0 and minus_amplitude >= 0")

    def sample(self, grid: Grid) -> FloatArray:
        c = _center(self.center, grid, "center")
        ring = _ball(grid, c, self.ring_outer) & ~_ball(grid, c, self.ring_inner)
        q = self.plus_amplitude * ring.astype(np.float64)
        if self.minus_amplitude > 0 and self.minus_radius > 0:
            q -= self.minus_amplitude * _ball(grid, c, self.minus_radius)
        return q


@dataclass(frozen=True)
class FromFile:
    """Weight read from an NLHF file; its grid must match the run grid."""

    file: str | Path

    def sample(self, grid: Grid) -> FloatArray:
        loaded = read_field(self.file)
        check_same_grid(grid, loaded.grid)
        logger.debug("weight loaded from %s", self.file)
        return np.array(loaded.values)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------
_PROFILES: dict[str, type] = {
    "two_balls": TwoBalls,
    "ball_ring": BallRing,
    "from_file": FromFile,
}

WEIGHT_KINDS = tuple(_PROFILES)


def get_weight_profile(kind: str, **parameters: Any) -> WeightProfile:
    """Instantiate the profile registered under ``kind``."""
    cls = _PROFILES.get(kind)
    if cls is None:
        raise DomainError(f"Unknown weight kind '{kind}'. Available: {list(_PROFILES)}")
    try:
        return cls(**parameters)
    except TypeError as exc:
        raise DomainError(f"invalid parameters for weight kind '{kind}': {exc}") from exc


@dataclass(frozen=True)
class WeightSpec:
    kind: str
    parameters: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in _PROFILES:
            raise DomainError(f"Unknown weight kind '{self.kind}'. Available: {list(_PROFILES)}")

    def profile(self) -> WeightProfile:
        return get_weight_profile(self.kind, **dict(self.parameters))


def realize(spec: WeightSpec, grid: Grid) -> ScalarField:
    """Sample the weight of ``spec`` on ``grid``.

    Raises
    ------
    DomainError
        If Q does not vanish outside [-L/2, L/2)^N.
    """
    values = spec.profile().sample(grid)
    bound = SUPPORT_FRACTION * grid.L
    outside = np.zeros(grid.shape, dtype=bool)
    for c in grid.coordinates():
        outside |= (c < -bound) | (c >= bound)
    if np.any(values[outside] != 0):
        raise DomainError(f"weight '{spec.kind}' is not supported in [-{bound:g}, {bound:g})^{grid.N}")
    Q = ScalarField(grid, values)
    logger.info(
        "weight %s realized: %d cells Q>0, %d cells Q<0, max|Q|=%.4g",
        spec.kind, int(np.count_nonzero(values > 0)), int(np.count_nonzero(values < 0)), Q.max_abs(),
    )
    return Q

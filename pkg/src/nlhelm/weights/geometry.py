"""Geometric diagnostics of the sign regions of Q.

diam(A_-) is compared with y_{(N-2)/2} (first positive zero of Y_{(N-2)/2}): a
defocusing region no wider than that keeps the form of R nonnegative on it.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from nlhelm.errors import DomainError
from nlhelm.numerics.grid_field import FloatArray, ScalarField, mask_from_weight
from nlhelm.numerics.special_functions import BesselOrder, first_positive_zero_y

logger = logging.getLogger(__name__)

BRUTE_FORCE_LIMIT = 20_000
_PAIR_CHUNK = 1024


@dataclass(frozen=True)
class GeometryReport:
    """diam(A_-) and dist(A_+, A_-) between cell centers.

    ``exact`` is False when the diameter is the bounding-box upper bound.
    """

    diam_aminus: float
    dist_apm: float
    exact: bool
    cells_aplus: int
    cells_aminus: int
    spacing: float
    dimension: int


@dataclass(frozen=True)
class DiameterCriterion:
    diameter_bound: float
    limit: float
    y_zero: float
    wavenumber: float
    satisfied: bool


def _diameter(points: FloatArray) -> tuple[float, bool]:
    count = points.shape[0]
    if count <= 1:
        return 0.0, True
    if count > BRUTE_FORCE_LIMIT:
        extent = points.max(axis=0) - points.min(axis=0)
        return float(np.sqrt(np.sum(extent ** 2))), False
    best = 0.0
    for start in range(0, count, _PAIR_CHUNK):
        block = points[start:start + _PAIR_CHUNK]
        squared = np.sum((block[:, None, :] - points[None, :, :]) ** 2, axis=-1)
        best = max(best, float(squared.max()))
    return math.sqrt(best), True


def _cross_distance(a: FloatArray, b: FloatArray) -> float:
    if a.shape[0] == 0 or b.shape[0] == 0:
        return math.inf
    distances, _ = cKDTree(a).query(b, k=1)
    return float(np.min(distances))


def geometry_report(Q: ScalarField) -> GeometryReport:
    aplus, aminus = mask_from_weight(Q)
    minus_points = aminus.centers()
    diam, exact = _diameter(minus_points)
    dist = _cross_distance(aplus.centers(), minus_points)
    if not exact:
        logger.warning("diam(A_-) over %d cells replaced by bounding-box bound %.6g", aminus.count, diam)
    logger.info("geometry: diam(A_-)=%.6g%s dist(A_+, A_-)=%.6g", diam, "" if exact else " (bound)", dist)
    return GeometryReport(diam, dist, exact, aplus.count, aminus.count, Q.grid.h, Q.grid.N)


def diameter_criterion(report: GeometryReport, wavenumber: float = 1.0) -> DiameterCriterion:
    """Check diam(A_-) + h sqrt(N) <= y_{(N-2)/2} / k.

    The cell diagonal turns the distance between centers into a bound for the
    union of cells.
    """
    if not wavenumber > 0:
        raise DomainError(f"wavenumber must be > 0, got {wavenumber}")
    y_zero = first_positive_zero_y(BesselOrder.for_dimension(report.dimension))
    bound = report.diam_aminus + report.spacing * math.sqrt(report.dimension) if report.cells_aminus else 0.0
    limit = y_zero / wavenumber
    return DiameterCriterion(bound, limit, y_zero, wavenumber, bound <= limit)

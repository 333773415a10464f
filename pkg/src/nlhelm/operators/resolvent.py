"""Real Helmholtz resolvent R f = Psi * f by zero-padded FFT convolution.

The kernel is sampled on a circular grid of 2M points per axis: index k < M is
the offset k*h, index k >= M the offset (k - 2M)*h, so every offset between two
cells of the M-grid is represented exactly and the product of spectra yields
the linear (non-periodic) convolution after cropping.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import fft, integrate

from nlhelm.errors import DomainError
from nlhelm.numerics.grid_field import (
    FloatArray,
    Grid,
    ScalarField,
    check_same_grid,
    lp_norm_values,
)
from nlhelm.numerics.special_functions import psi_kernel

logger = logging.getLogger(__name__)

ComplexArray = NDArray[np.complex128]

NORM_PROBES = 50


@dataclass(frozen=True, eq=False)
class ResolventOperator:
    """Precomputed truncated kernel of R on a given grid.

    Attributes
    ----------
    grid : Grid
        Grid the operator acts on.
    kernel_samples : ndarray
        Psi at the (2M)^N circular offsets, origin cell regularized.
    kernel_spectrum : ndarray
        ``rfftn`` of ``kernel_samples`` (half spectrum of the padded kernel).
    origin_cell_value : float
        Mean of Psi over the ball whose volume equals one cell.
    """

    grid: Grid
    kernel_samples: FloatArray
    kernel_spectrum: ComplexArray
    origin_cell_value: float

    @property
    def padded_shape(self) -> tuple[int, ...]:
        return (2 * self.grid.M,) * self.grid.N

    def apply(self, values: FloatArray) -> FloatArray:
        """Array-level R: h^N (Psi * f) cropped to the grid."""
        grid = self.grid
        crop = (slice(0, grid.M),) * grid.N
        padded = np.zeros(self.padded_shape)
        padded[crop] = values
        spectrum = fft.rfftn(padded)
        spectrum *= self.kernel_spectrum
        conv = fft.irfftn(spectrum, s=self.padded_shape)
        return conv[crop] * grid.cell_volume

    def kernel_block(self, rows: NDArray[np.intp], cols: NDArray[np.intp]) -> FloatArray:
        """Kernel values Psi(x_a - x_b) for multi-index arrays of shape (n, N) and (m, N)."""
        two_m = 2 * self.grid.M
        diff = np.mod(rows[:, None, :] - cols[None, :, :], two_m)
        return self.kernel_samples[tuple(np.moveaxis(diff, -1, 0))]


def _origin_cell_value(grid: Grid) -> float:
    N = grid.N
    radius = grid.h * (math.gamma(N / 2.0 + 1.0) / math.pi ** (N / 2.0)) ** (1.0 / N)
    sphere_area = 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)

    def integrand(r: float) -> float:
        return r ** (N - 1) * psi_kernel(r, N)

    # r^(N-1) Psi(r) behaves like r log r (N = 2) or r (N >= 3) at 0: integrable.
    total, err = integrate.quad(integrand, 0.0, radius, epsabs=1e-15, epsrel=1e-13, limit=200)
    logger.debug("origin cell quadrature: radius=%.6g integral=%.6g err=%.2g", radius, total, err)
    return sphere_area * total / grid.cell_volume


def build(grid: Grid) -> ResolventOperator:
    """Sample Psi on the padded circular grid and transform it once."""
    two_m = 2 * grid.M
    offsets = np.arange(two_m)
    offsets = np.where(offsets < grid.M, offsets, offsets - two_m)
    squared = np.zeros((two_m,) * grid.N, dtype=np.int64)
    for axis in range(grid.N):
        shape = [1] * grid.N
        shape[axis] = two_m
        squared = squared + (offsets ** 2).reshape(shape)

    # Psi is radial: evaluate once per distinct |offset|^2.
    unique, inverse = np.unique(squared, return_inverse=True)
    distinct = np.empty(unique.shape, dtype=np.float64)
    nonzero = unique > 0
    distinct[nonzero] = psi_kernel(grid.h * np.sqrt(unique[nonzero].astype(np.float64)), grid.N)
    origin = _origin_cell_value(grid)
    distinct[~nonzero] = origin
    samples = distinct[inverse].reshape(squared.shape)
    samples.setflags(write=False)

    spectrum = fft.rfftn(samples)
    logger.info(
        "resolvent built: N=%d M=%d L=%g h=%.4g origin=%.6g distinct radii=%d",
        grid.N, grid.M, grid.L, grid.h, origin, unique.size,
    )
    return ResolventOperator(grid, samples, spectrum, origin)


def apply_R(op: ResolventOperator, f: ScalarField) -> ScalarField:
    """Truncated-kernel convolution h^N (Psi * f) on the grid of ``op``."""
    check_same_grid(op.grid, f.grid)
    return ScalarField(op.grid, op.apply(f.values))


def estimate_operator_norm(
    op: ResolventOperator,
    p: float,
    probes: int = NORM_PROBES,
    *,
    rng: np.random.Generator | None = None,
    support: ScalarField | None = None,
) -> float:
    """Largest ratio ||R f||_p / ||f||_p' over random unit-norm probes.

    ``support`` (optional) multiplies every probe, e.g. to keep probes compactly
    supported well inside the box.
    """
    if not p > 2:
        raise DomainError(f"exponent p must be > 2, got {p}")
    rng = rng or np.random.default_rng(0)
    p_conj = p / (p - 1.0)
    vol = op.grid.cell_volume
    best = 0.0
    for _ in range(probes):
        values = rng.standard_normal(op.grid.shape)
        if support is not None:
            values = values * support.values
        norm = lp_norm_values(values, p_conj, vol)
        if norm == 0.0:
            continue
        image = op.apply(values / norm)
        best = max(best, lp_norm_values(image, p, vol))
    logger.debug("empirical ||R||_{%s' -> %s} over %d probes: %.6g", p, p, probes, best)
    return best


__all__ = [
    "ResolventOperator",
    "apply_R",
    "build",
    "estimate_operator_norm",
]

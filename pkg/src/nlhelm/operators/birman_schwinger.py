"""Birman-Schwinger operator K f = |Q|^(1/p) R(|Q|^(1/p) f) and the method constants.

alpha = max { <phi, K phi> : ||phi||_p' = 1, phi on A_+ }
beta  = max { ||1_{A_+} K psi||_p : ||psi||_p' = 1, psi on A_- }
lambda0 = (2 beta / alpha)^p

Both maxima are computed by multi-start generalized power iterations; the
positivity of the form on A_- is checked as a symmetric eigenvalue problem.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from nlhelm.errors import ConvergenceError, DomainError, GridMismatchError
from nlhelm.numerics.grid_field import (
    FloatArray,
    Grid,
    ScalarField,
    SupportMask,
    check_same_grid,
    dual_map_values,
    lp_norm_values,
    mask_from_weight,
)
from nlhelm.operators.resolvent import ResolventOperator

logger = logging.getLogger(__name__)

DEFAULT_SEEDS = 8
RAYLEIGH_TOL = 1e-10
MAX_POWER_ITERS = 10_000
MONOTONE_SLACK = 1e-12

DENSE_POSITIVITY_LIMIT = 4096
# Cells of A_+ and A_- together for which K blocks are kept as dense matrices.
DENSE_BLOCK_LIMIT = 3000
POSITIVITY_TOL = 1e-10

_SPECTRAL_ESTIMATE_ITERS = 30
_MATRIX_ROW_CHUNK = 256


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class WeightedOperator:
    """K together with the sign masks of Q and the exponent p.

    ``p == 2`` is accepted as a diagnostic mode for the constants; the
    variational code requires p > 2.
    """

    resolvent: ResolventOperator
    weight: ScalarField
    weight_root: ScalarField
    aplus: SupportMask
    aminus: SupportMask
    p: float

    def __post_init__(self) -> None:
        grid = self.resolvent.grid
        for item in (self.weight, self.weight_root, self.aplus, self.aminus):
            check_same_grid(grid, item.grid)
        if not self.p >= 2:
            raise DomainError(f"exponent p must be >= 2, got {self.p}")
        if np.any(self.weight_root.values < 0):
            raise DomainError("weight root must be nonnegative")
        if np.any(self.aplus.indicator & self.aminus.indicator):
            raise GridMismatchError("A_+ and A_- must be disjoint")

    @classmethod
    def from_weight(cls, resolvent: ResolventOperator, Q: ScalarField, p: float) -> "WeightedOperator":
        aplus, aminus = mask_from_weight(Q)
        root = ScalarField(Q.grid, np.abs(Q.values) ** (1.0 / p))
        return cls(resolvent, Q, root, aplus, aminus, float(p))

    @property
    def grid(self) -> Grid:
        return self.resolvent.grid

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def cell_volume(self) -> float:
        return self.grid.cell_volume

    def apply(self, values: FloatArray) -> FloatArray:
        w = self.weight_root.values
        return w * self.resolvent.apply(w * values)

    def norm(self, values: FloatArray, q: float) -> float:
        return lp_norm_values(values, q, self.cell_volume)

    def pair(self, f: FloatArray, g: FloatArray) -> float:
        return float(np.dot(f.ravel(), g.ravel())) * self.cell_volume

    @property
    def has_dense_blocks(self) -> bool:
        return self.aplus.count + self.aminus.count <= DENSE_BLOCK_LIMIT

    @cached_property
    def plus_block(self) -> FloatArray:
        """K on A_+ x A_+ in the cell order of ``aplus.indices()``."""
        return masked_matrix(self, self.aplus, self.aplus)

    @cached_property
    def minus_block(self) -> FloatArray:
        return masked_matrix(self, self.aminus, self.aminus)

    @cached_property
    def cross_block(self) -> FloatArray:
        """A_+ rows, A_- columns; the A_- x A_+ block is its transpose."""
        return masked_matrix(self, self.aplus, self.aminus)


@dataclass(frozen=True, eq=False)
class MethodConstants:
    """alpha, beta, lambda0 with the maximizers phi0 (on A_+) and psi_star (on A_-)."""

    alpha: float
    beta: float
    lambda0: float
    phi0: ScalarField
    p: float
    psi_star: ScalarField | None = None

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1.0)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "lambda0": self.lambda0, "p": self.p}


class _PowerRun(NamedTuple):
    value: float
    vector: FloatArray
    iterations: int
    converged: bool


# ---------------------------------------------------------------------------
# K and the dense oracle
# ---------------------------------------------------------------------------
def apply_K(op: WeightedOperator, f: ScalarField) -> ScalarField:
    check_same_grid(op.grid, f.grid)
    return ScalarField(op.grid, op.apply(f.values))


def masked_matrix(op: WeightedOperator, rows: SupportMask, cols: SupportMask) -> FloatArray:
    """Dense block h^N w_a Psi(x_a - x_b) w_b of K for cells a in ``rows``, b in ``cols``.

    Its eigenvalues (square blocks) are those of K restricted to the mask in the
    quadrature inner product.
    """
    row_idx, col_idx = rows.indices(), cols.indices()
    w = op.weight_root.values
    w_rows, w_cols = w[rows.indicator], w[cols.indicator]
    out = np.empty((row_idx.shape[0], col_idx.shape[0]))
    for start in range(0, row_idx.shape[0], _MATRIX_ROW_CHUNK):
        stop = start + _MATRIX_ROW_CHUNK
        out[start:stop] = op.resolvent.kernel_block(row_idx[start:stop], col_idx)
    out *= op.cell_volume * w_rows[:, None] * w_cols[None, :]
    return out


def _masked_spectral_radius(op: WeightedOperator, mask: np.ndarray) -> float:
    """Few-step L^2 power estimate of the largest |eigenvalue| of 1_mask K 1_mask."""
    rng = np.random.default_rng(12345)
    v = np.where(mask, rng.random(op.grid.shape), 0.0)
    estimate = 0.0
    for _ in range(_SPECTRAL_ESTIMATE_ITERS):
        norm = np.linalg.norm(v)
        if norm == 0.0:
            return 0.0
        v = v / norm
        w = np.where(mask, op.apply(v), 0.0)
        estimate = float(np.linalg.norm(w))
        v = w
    return estimate


# ---------------------------------------------------------------------------
# alpha
# ---------------------------------------------------------------------------
def _alpha_run(op: WeightedOperator, start: FloatArray, tol: float, max_iters: int) -> _PowerRun:
    p, pc = op.p, op.p_conj
    mask = op.aplus.indicator
    phi = start / op.norm(start, pc)
    kphi = op.apply(phi)
    rho = op.pair(phi, kphi)
    shift = 0.0
    shift_unit = 0.0
    for it in range(1, max_iters + 1):
        gradient = kphi + shift * dual_map_values(phi, pc) if shift else kphi
        g = np.where(mask, gradient, 0.0)
        gnorm = op.norm(g, p)
        if gnorm == 0.0:
            return _PowerRun(rho, phi, it, True)
        candidate = dual_map_values(g, p) / gnorm ** (p - 1.0)
        kcandidate = op.apply(candidate)
        rho_new = op.pair(candidate, kcandidate)
        if rho_new < rho - MONOTONE_SLACK * abs(rho):
            # Plain step lost monotonicity: shift by the (constant on the sphere) p'-norm term.
            if shift == 0.0:
                radius = _masked_spectral_radius(op, mask) or 1.0
                shift_unit = radius * op.cell_volume ** ((pc - 2.0) / pc) / (pc - 1.0) / 8.0
                shift = shift_unit
                logger.warning(
                    "Rayleigh quotient decreased (%.12g -> %.12g) at iteration %d; switching to shifted steps",
                    rho, rho_new, it,
                )
            else:
                shift *= 2.0
            continue
        converged = abs(rho_new - rho) <= tol * abs(rho)
        phi, kphi, rho = candidate, kcandidate, rho_new
        if converged:
            return _PowerRun(rho, phi, it, True)
    return _PowerRun(rho, phi, max_iters, False)


def _nonnegative_start(op: WeightedOperator, mask: np.ndarray, seed: int, index: int) -> FloatArray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    return np.where(mask, rng.random(op.grid.shape), 0.0)


def _best_of(runs: list[_PowerRun], label: str) -> _PowerRun:
    best: _PowerRun | None = None
    for index, run in enumerate(runs):
        logger.debug("%s seed %d: value=%.15g iterations=%d converged=%s",
                     label, index, run.value, run.iterations, run.converged)
        if not run.converged:
            logger.warning("%s seed %d did not converge after %d iterations", label, index, run.iterations)
        if best is None or run.value > best.value:
            best = run
    if not any(run.converged for run in runs):
        raise ConvergenceError(f"{label}: no seed converged", iterations=best.iterations, best=best)
    return best


def _multi_start(
    op: WeightedOperator,
    mask: np.ndarray,
    runner: Callable[[FloatArray], _PowerRun],
    seeds: int,
    seed: int,
    workers: int,
) -> list[_PowerRun]:
    starts = [_nonnegative_start(op, mask, seed, index) for index in range(seeds)]
    if workers > 1 and seeds > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(runner, starts))
    return [runner(start) for start in starts]


def compute_alpha(
    op: WeightedOperator,
    seeds: int = DEFAULT_SEEDS,
    *,
    tol: float = RAYLEIGH_TOL,
    max_iters: int = MAX_POWER_ITERS,
    seed: int = 0,
    workers: int = 1,
) -> tuple[float, ScalarField]:
    """alpha and a unit L^p'(A_+) maximizer phi0.

    Ties between seeds keep the lowest seed index.
    """
    if op.aplus.is_empty:
        raise DomainError("compute_alpha requires a nonempty A_+")
    runs = _multi_start(
        op, op.aplus.indicator,
        lambda start: _alpha_run(op, start, tol, max_iters),
        seeds, seed, workers,
    )
    best = _best_of(runs, "alpha")
    logger.info("alpha = %.12g (|A_+| = %d cells, %d seeds)", best.value, op.aplus.count, seeds)
    return best.value, ScalarField(op.grid, best.vector)


# ---------------------------------------------------------------------------
# beta
# ---------------------------------------------------------------------------
def _beta_run(op: WeightedOperator, start: FloatArray, tol: float, max_iters: int) -> _PowerRun:
    p, pc = op.p, op.p_conj
    plus, minus = op.aplus.indicator, op.aminus.indicator
    psi = start / op.norm(start, pc)
    g = np.where(plus, op.apply(psi), 0.0)
    value = op.norm(g, p)
    for it in range(1, max_iters + 1):
        if value == 0.0:
            return _PowerRun(0.0, psi, it, True)
        back = np.where(minus, op.apply(dual_map_values(g, p)), 0.0)
        back_norm = op.norm(back, p)
        if back_norm == 0.0:
            return _PowerRun(value, psi, it, True)
        candidate = dual_map_values(back, p) / back_norm ** (p - 1.0)
        g_new = np.where(plus, op.apply(candidate), 0.0)
        value_new = op.norm(g_new, p)
        if value_new < value - MONOTONE_SLACK * value:
            logger.warning("beta iteration decreased (%.12g -> %.12g) at iteration %d", value, value_new, it)
        converged = abs(value_new - value) <= tol * abs(value)
        psi, g, value = candidate, g_new, value_new
        if converged:
            return _PowerRun(value, psi, it, True)
    return _PowerRun(value, psi, max_iters, False)


def compute_beta(
    op: WeightedOperator,
    seeds: int = DEFAULT_SEEDS,
    *,
    tol: float = RAYLEIGH_TOL,
    max_iters: int = MAX_POWER_ITERS,
    seed: int = 0,
    workers: int = 1,
) -> tuple[float, ScalarField]:
    """beta = ||1_{A_+} K 1_{A_-}||_{p' -> p} and a unit maximizer psi_star on A_-.

    The inner maximization over phi is solved in closed form (Hoelder equality
    at phi = dual_map(g, p) / ||g||_p^(p-1)), leaving a power iteration in psi.
    """
    if op.aminus.is_empty or op.aplus.is_empty:
        logger.info("beta = 0 (empty sign region)")
        return 0.0, op.grid.zeros()
    runs = _multi_start(
        op, op.aminus.indicator,
        lambda start: _beta_run(op, start, tol, max_iters),
        seeds, seed + 1, workers,
    )
    best = _best_of(runs, "beta")
    logger.info("beta = %.12g (|A_-| = %d cells, %d seeds)", best.value, op.aminus.count, seeds)
    return best.value, ScalarField(op.grid, best.vector)


def lambda0(alpha: float, beta: float, p: float) -> float:
    """Threshold (2 beta / alpha)^p."""
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0, got {alpha}")
    return (2.0 * beta / alpha) ** p


def compute_constants(
    op: WeightedOperator,
    seeds: int = DEFAULT_SEEDS,
    *,
    seed: int = 0,
    workers: int = 1,
) -> MethodConstants:
    alpha, phi0 = compute_alpha(op, seeds, seed=seed, workers=workers)
    beta, psi_star = compute_beta(op, seeds, seed=seed, workers=workers)
    lam0 = lambda0(alpha, beta, op.p)
    logger.info("lambda0 = (2 beta / alpha)^p = %.12g", lam0)
    return MethodConstants(alpha, beta, lam0, phi0, op.p, psi_star)


# ---------------------------------------------------------------------------
# Positivity on A_-
# ---------------------------------------------------------------------------
def check_negative_positivity(
    op: WeightedOperator,
    *,
    dense_limit: int = DENSE_POSITIVITY_LIMIT,
    tol: float = POSITIVITY_TOL,
) -> tuple[float, bool]:
    """Smallest eigenvalue of K restricted to A_- and whether it passes PSD.

    Returns
    -------
    (min_eigenvalue, passed)
        ``passed`` iff min_eigenvalue >= -tol * (largest |eigenvalue|).
    """
    if op.aminus.is_empty:
        return 0.0, True
    count = op.aminus.count
    if count <= dense_limit:
        block = op.minus_block
        eigenvalues = linalg.eigh(0.5 * (block + block.T), eigvals_only=True)
        smallest = float(eigenvalues[0])
        scale = float(np.max(np.abs(eigenvalues)))
        method = "dense"
    else:
        mask = op.aminus.indicator

        def matvec(v: np.ndarray) -> np.ndarray:
            full = np.zeros(op.grid.shape)
            full[mask] = np.ravel(v)
            return op.apply(full)[mask]

        operator = LinearOperator((count, count), matvec=matvec, dtype=np.float64)
        try:
            smallest = float(eigsh(operator, k=1, which="SA", tol=1e-10, return_eigenvectors=False)[0])
            largest = float(eigsh(operator, k=1, which="LM", tol=1e-10, return_eigenvectors=False)[0])
        except ArpackNoConvergence as exc:
            raise ConvergenceError(f"Lanczos did not converge on |A_-| = {count} cells: {exc}") from exc
        scale = max(abs(largest), abs(smallest))
        method = "lanczos"
    passed = smallest >= -tol * scale
    logger.info(
        "positivity on A_- (%s, %d cells): min eigenvalue %.6g, scale %.6g -> %s",
        method, count, smallest, scale, "pass" if passed else "FAIL",
    )
    return smallest, passed

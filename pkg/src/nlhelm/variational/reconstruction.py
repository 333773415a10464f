"""Primal solution u = R(|Q|^(1/p) (phi - psi)) and its self-checks."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from nlhelm.errors import DomainError
from nlhelm.numerics.grid_field import (
    WINDOW_FRACTION,
    FloatArray,
    ScalarField,
    SupportMask,
    check_same_grid,
    discrete_laplacian,
    dual_map_values,
    lp_norm_values,
)
from nlhelm.operators.birman_schwinger import WeightedOperator
from nlhelm.variational.mountain_pass import MpResult

logger = logging.getLogger(__name__)

RESIDUAL_EPS = 1e-300


@dataclass(frozen=True, eq=False)
class SolutionRecord:
    """Reconstructed solution at one lambda with its residuals.

    ``norms`` holds (||u||_p, ||phi||_p', ||psi||_p'). ``scaled`` and
    ``residual_pde_scaled`` are filled only for wavenumber k != 1.
    """

    u: ScalarField
    lam: float
    level: float
    residual_integral: float
    residual_pde: float
    norms: tuple[float, float, float]
    chain_identity: float
    phi: ScalarField
    psi: ScalarField
    scaled: ScalarField | None = None
    residual_pde_scaled: float | None = None

    def v(self, op: WeightedOperator) -> ScalarField:
        return op.aplus.restrict(self.u)

    def w(self, op: WeightedOperator) -> ScalarField:
        return op.aminus.restrict(self.u)


def _check_lambda(lam: float) -> None:
    if not lam > 0:
        raise DomainError(f"lambda must be > 0, got {lam}")


def q_lambda(op: WeightedOperator, lam: float) -> FloatArray:
    """Q_lambda = lambda Q_+ - Q_- sampled on the grid of ``op``."""
    q = op.weight.values
    return np.where(q > 0, lam * q, q)


def build_u(phi: ScalarField, psi: ScalarField, op: WeightedOperator) -> ScalarField:
    check_same_grid(op.grid, phi.grid)
    check_same_grid(op.grid, psi.grid)
    density = op.weight_root.values * (phi.values - psi.values)
    return ScalarField(op.grid, op.resolvent.apply(density))


def residual_integral(u: ScalarField, lam: float, op: WeightedOperator) -> float:
    """||u - R(Q_lambda |u|^(p-2) u)||_p / ||u||_p."""
    _check_lambda(lam)
    check_same_grid(op.grid, u.grid)
    vol = op.cell_volume
    image = op.resolvent.apply(q_lambda(op, lam) * dual_map_values(u.values, op.p))
    return lp_norm_values(u.values - image, op.p, vol) / max(lp_norm_values(u.values, op.p, vol), RESIDUAL_EPS)


def _pde_residual(u: ScalarField, k: float, q: FloatArray, p: float, window: SupportMask) -> float:
    inside = window.indicator
    operator = -discrete_laplacian(u).values - k * k * u.values
    defect = np.where(inside, operator - q * dual_map_values(u.values, p), 0.0)
    scale = float(np.linalg.norm(np.where(inside, u.values, 0.0)))
    return float(np.linalg.norm(defect)) / max(k * k * scale, RESIDUAL_EPS)


def residual_pde(
    u: ScalarField,
    lam: float,
    op: WeightedOperator,
    window_fraction: float = WINDOW_FRACTION,
) -> float:
    """||(-Delta_h - 1) u - Q_lambda |u|^(p-2) u||_2 / ||u||_2 on the interior window."""
    _check_lambda(lam)
    check_same_grid(op.grid, u.grid)
    return _pde_residual(u, 1.0, q_lambda(op, lam), op.p, u.grid.window(window_fraction))


def chain_identity(u: ScalarField, phi: ScalarField, psi: ScalarField, lam: float, op: WeightedOperator) -> float:
    """Relative L^p' mismatch of Q_lambda |u|^(p-2) u = |Q|^(1/p) (phi - psi) on supp Q."""
    _check_lambda(lam)
    lhs = q_lambda(op, lam) * dual_map_values(u.values, op.p)
    rhs = op.weight_root.values * (phi.values - psi.values)
    support = op.weight.values != 0
    mismatch = lp_norm_values(np.where(support, lhs - rhs, 0.0), op.p_conj, op.cell_volume)
    scale = lp_norm_values(u.values, op.p, op.cell_volume) ** (op.p - 1.0)
    return mismatch / max(scale, RESIDUAL_EPS)


def rescale_to_k(u: ScalarField, k: float, p: float) -> ScalarField:
    """v(x) = k^(2/(p-2)) u(kx) on the grid scaled by 1/k.

    The nodes of the scaled grid map onto the original nodes under x -> kx, so
    the resampling is exact.
    """
    if not k > 0:
        raise DomainError(f"wavenumber k must be > 0, got {k}")
    if not p > 2:
        raise DomainError(f"exponent p must be > 2, got {p}")
    if k == 1.0:
        return u
    return ScalarField(u.grid.scaled(1.0 / k), u.values * k ** (2.0 / (p - 2.0)))


def residual_pde_scaled(v: ScalarField, k: float, lam: float, op: WeightedOperator) -> float:
    """k-form residual ||(-Delta_h - k^2) v - Q_lambda(kx) |v|^(p-2) v||_2 / (k^2 ||v||_2)."""
    _check_lambda(lam)
    check_same_grid(op.grid.scaled(1.0 / k), v.grid)
    return _pde_residual(v, k, q_lambda(op, lam), op.p, v.grid.window())


def reconstruct(result: MpResult, op: WeightedOperator, wavenumber: float = 1.0) -> SolutionRecord:
    """SolutionRecord for a mountain-pass result, with the k-rescaled field when k != 1."""
    lam = result.lam
    u = build_u(result.phi_star, result.psi_star, op)
    norms = (
        lp_norm_values(u.values, op.p, op.cell_volume),
        lp_norm_values(result.phi_star.values, op.p_conj, op.cell_volume),
        lp_norm_values(result.psi_star.values, op.p_conj, op.cell_volume),
    )
    scaled = residual_scaled = None
    if wavenumber != 1.0:
        scaled = rescale_to_k(u, wavenumber, op.p)
        residual_scaled = residual_pde_scaled(scaled, wavenumber, lam, op)
    record = SolutionRecord(
        u=u,
        lam=lam,
        level=result.level,
        residual_integral=residual_integral(u, lam, op),
        residual_pde=residual_pde(u, lam, op),
        norms=norms,
        chain_identity=chain_identity(u, result.phi_star, result.psi_star, lam, op),
        phi=result.phi_star,
        psi=result.psi_star,
        scaled=scaled,
        residual_pde_scaled=residual_scaled,
    )
    logger.info(
        "lambda=%g: ||u||_p=%.6g residual_integral=%.3g residual_pde=%.3g chain=%.3g",
        lam, norms[0], record.residual_integral, record.residual_pde, record.chain_identity,
    )
    return record

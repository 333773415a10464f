"""Dual energy J_lambda(phi, psi), the inner maximization psi = Z(phi) and the reduced functional.

    J(phi, psi) = lambda^(1-p')/p' ||phi||^p' - 1/p' ||psi||^p' - 1/2 <phi - psi, K(phi - psi)>

phi lives on A_+, psi on A_-. For fixed phi, psi -> J is strictly concave when the
form of K is nonnegative on A_-, and its maximizer Z(phi) does not depend on lambda.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import LinearOperator, cg

from nlhelm.errors import ConvergenceError, DomainError, PositivityError
from nlhelm.numerics.grid_field import (
    FloatArray,
    ScalarField,
    check_same_grid,
    dual_map_values,
    lp_norm_values,
)
from nlhelm.operators.birman_schwinger import DENSE_BLOCK_LIMIT, WeightedOperator

logger = logging.getLogger(__name__)

INNER_TOL_FACTOR = 1e-9
INNER_MAX_ITERS = 10_000
INITIAL_DAMPING = 0.5
MIN_DAMPING = 1e-12
NEWTON_HALVINGS = 4
RESIDUAL_DECREASE = 1e-4
CG_RTOL = 1e-12
CG_MAX_ITERS = 500
# psi beyond this multiple of (1 + ||phi||) means the inner objective is unbounded.
UNBOUNDED_RATIO = 1e12
_ASCENT_SLACK = 1e-14
# Attainable residual relative to ||1_{A_-} K phi||_p in double precision.
ROUNDOFF_FLOOR = 1e-14


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class DualPair:
    phi: ScalarField
    psi: ScalarField
    p: float

    def __post_init__(self) -> None:
        check_same_grid(self.phi.grid, self.psi.grid)


@dataclass(frozen=True)
class InnerSolveReport:
    iterations: int
    optimality_residual: float
    objective: float
    converged: bool = True


class ReducedEvaluation(NamedTuple):
    """J~(phi) with the maximizer Z(phi) and grad J~(phi), all as raw arrays."""

    value: float
    z: FloatArray
    gradient: FloatArray
    report: InnerSolveReport


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------
def _check_lambda(lam: float) -> None:
    if not lam > 0:
        raise DomainError(f"lambda must be > 0, got {lam}")


def _check_supports(phi: ScalarField, psi: ScalarField | None, op: WeightedOperator) -> None:
    check_same_grid(op.grid, phi.grid)
    if np.any(phi.values[~op.aplus.indicator]):
        raise DomainError("phi must vanish outside A_+")
    if psi is not None:
        check_same_grid(op.grid, psi.grid)
        if np.any(psi.values[~op.aminus.indicator]):
            raise DomainError("psi must vanish outside A_-")


def default_inner_tol(phi_values: FloatArray, op: WeightedOperator) -> float:
    pc = op.p_conj
    return INNER_TOL_FACTOR * max(1.0, op.norm(phi_values, pc) ** (pc - 1.0))


# ---------------------------------------------------------------------------
# J and its partial gradients
# ---------------------------------------------------------------------------
def eval_J(phi: ScalarField, psi: ScalarField, lam: float, op: WeightedOperator) -> float:
    _check_lambda(lam)
    _check_supports(phi, psi, op)
    pc = op.p_conj
    diff = phi.values - psi.values
    return (
        lam ** (1.0 - pc) / pc * op.norm(phi.values, pc) ** pc
        - op.norm(psi.values, pc) ** pc / pc
        - 0.5 * op.pair(diff, op.apply(diff))
    )


def grad_phi(phi: ScalarField, psi: ScalarField, lam: float, op: WeightedOperator) -> ScalarField:
    """lambda^(1-p') |phi|^(p'-2) phi - 1_{A_+} K(phi - psi)."""
    _check_lambda(lam)
    _check_supports(phi, psi, op)
    pc = op.p_conj
    coupling = op.apply(phi.values - psi.values)
    values = lam ** (1.0 - pc) * dual_map_values(phi.values, pc) - np.where(op.aplus.indicator, coupling, 0.0)
    return ScalarField(op.grid, values)


def grad_psi(phi: ScalarField, psi: ScalarField, lam: float, op: WeightedOperator) -> ScalarField:
    """-|psi|^(p'-2) psi + 1_{A_-} K(phi - psi); zero exactly at Z(phi)."""
    _check_lambda(lam)
    _check_supports(phi, psi, op)
    coupling = op.apply(phi.values - psi.values)
    values = np.where(op.aminus.indicator, coupling, 0.0) - dual_map_values(psi.values, op.p_conj)
    return ScalarField(op.grid, values)


# ---------------------------------------------------------------------------
# Inner problem
# ---------------------------------------------------------------------------
class _InnerSolution(NamedTuple):
    psi: FloatArray
    k_phi: FloatArray
    k_psi: FloatArray
    report: InnerSolveReport


class _MinusBlock:
    """K on A_- acting on cell vectors; dense when A_- is small, FFT otherwise."""

    def __init__(self, op: WeightedOperator) -> None:
        self.op = op
        self.mask = op.aminus.indicator
        self.count = op.aminus.count
        self.matrix = op.minus_block if self.count <= DENSE_BLOCK_LIMIT else None

    def apply(self, v: FloatArray) -> FloatArray:
        if self.matrix is not None:
            return self.matrix @ v
        full = np.zeros(self.op.grid.shape)
        full[self.mask] = v
        return self.op.apply(full)[self.mask]

    def newton_direction(self, e: FloatArray, rhs: FloatArray) -> FloatArray:
        """Solve (I + K E) delta = rhs, E = diag(e) >= 0, via the SPD system in s = E^(1/2) delta."""
        root = np.sqrt(e)
        if self.matrix is not None:
            system = np.eye(self.count) + root[:, None] * self.matrix * root[None, :]
            s = linalg.solve(system, root * rhs, assume_a="pos")
        else:
            operator = LinearOperator(
                (self.count, self.count),
                matvec=lambda x: np.ravel(x) + root * self.apply(root * np.ravel(x)),
                dtype=np.float64,
            )
            s, info = cg(operator, root * rhs, rtol=CG_RTOL, atol=0.0, maxiter=CG_MAX_ITERS)
            if info < 0:
                raise linalg.LinAlgError(f"conjugate gradients broke down (info={info})")
        return rhs - self.apply(root * s)


def _solve_inner(
    phi: FloatArray,
    op: WeightedOperator,
    tol: float | None,
    psi0: FloatArray | None,
    max_iters: int,
) -> _InnerSolution:
    p, pc = op.p, op.p_conj
    minus = op.aminus.indicator
    k_phi = op.apply(phi)
    self_term = op.pair(phi, k_phi)
    if op.aminus.is_empty:
        zeros = np.zeros(op.grid.shape)
        return _InnerSolution(zeros, k_phi, zeros, InnerSolveReport(0, 0.0, -0.5 * self_term))

    tol = default_inner_tol(phi, op) if tol is None else tol
    bound = UNBOUNDED_RATIO * (1.0 + op.norm(phi, pc))
    vol = op.cell_volume
    block = _MinusBlock(op)
    drive = k_phi[minus]
    tol = max(tol, ROUNDOFF_FLOOR * lp_norm_values(drive, p, vol))

    # Everything below works on cell vectors over A_-; k is K psi restricted to A_-.
    def objective(psi: FloatArray, k: FloatArray) -> float:
        return (
            -lp_norm_values(psi, pc, vol) ** pc / pc
            - 0.5 * self_term
            + vol * (float(np.dot(psi, drive)) - 0.5 * float(np.dot(psi, k)))
        )

    def shortfall(psi: FloatArray, k: FloatArray) -> FloatArray:
        return dual_map_values(psi, pc) + k - drive

    def newton_step(psi, k, value, short):
        eta = dual_map_values(psi, pc)
        try:
            delta = block.newton_direction((p - 1.0) * np.abs(eta) ** (p - 2.0), -short)
        except linalg.LinAlgError as exc:
            logger.debug("inner Newton direction unavailable: %s", exc)
            return None
        merit = float(np.linalg.norm(short))
        slack = _ASCENT_SLACK * max(1.0, abs(value))
        t = 1.0
        for _ in range(NEWTON_HALVINGS):
            trial = dual_map_values(eta + t * delta, p)
            k_trial = block.apply(trial)
            trial_value = objective(trial, k_trial)
            if (trial_value >= value - slack
                    and np.linalg.norm(shortfall(trial, k_trial)) <= (1.0 - RESIDUAL_DECREASE * t) * merit):
                return trial, k_trial, trial_value
            t *= 0.5
        return None

    def damped_step(psi, k, value, tau):
        target = dual_map_values(drive - k, p)
        k_target = block.apply(target)
        slack = _ASCENT_SLACK * max(1.0, abs(value))
        while True:
            candidate = (1.0 - tau) * psi + tau * target
            k_candidate = (1.0 - tau) * k + tau * k_target
            candidate_value = objective(candidate, k_candidate)
            if candidate_value >= value - slack:
                return (candidate, k_candidate, candidate_value), tau
            tau *= 0.5
            if tau < MIN_DAMPING:
                return None, tau

    psi = np.zeros(block.count) if psi0 is None else np.asarray(psi0, dtype=np.float64)[minus]
    k = block.apply(psi) if psi.any() else np.zeros(block.count)
    value = objective(psi, k)
    tau = INITIAL_DAMPING
    residual = np.inf
    it = 0
    for it in range(max_iters + 1):
        short = shortfall(psi, k)
        residual = lp_norm_values(short, p, vol)
        if not (np.isfinite(residual) and np.isfinite(value)):
            raise PositivityError("inner objective is not finite; the form of K is not nonnegative on A_-")
        if residual <= tol:
            break
        if it == max_iters:
            raise ConvergenceError(
                f"inner solve did not reach tol {tol:.3g} in {max_iters} iterations (residual {residual:.3g})",
                iterations=max_iters,
                best=_embed(psi, minus),
            )
        step = newton_step(psi, k, value, short)
        if step is None:
            step, tau = damped_step(psi, k, value, min(1.0, 2.0 * tau))
            if step is None:
                raise ConvergenceError(
                    f"inner solve stalled at iteration {it} (residual {residual:.3g}, tol {tol:.3g})",
                    iterations=it,
                    best=_embed(psi, minus),
                )
        psi, k, value = step
        if lp_norm_values(psi, pc, vol) > bound:
            raise PositivityError(
                f"inner objective grows without bound (||psi|| > {bound:.3g}); "
                "the form of K is not nonnegative on A_-"
            )

    full = _embed(psi, minus)
    k_psi = op.apply(full)
    residual = op.norm(np.where(minus, k_phi - k_psi, 0.0) - dual_map_values(full, pc), p)
    value = (
        -op.norm(full, pc) ** pc / pc
        - 0.5 * (self_term - 2.0 * op.pair(full, k_phi) + op.pair(full, k_psi))
    )
    return _InnerSolution(full, k_phi, k_psi, InnerSolveReport(it, residual, value))


def _embed(cells: FloatArray, mask: np.ndarray) -> FloatArray:
    full = np.zeros(mask.shape)
    full[mask] = cells
    return full


def solve_Z(
    phi: ScalarField,
    op: WeightedOperator,
    tol_inner: float | None = None,
    *,
    psi0: ScalarField | None = None,
    max_iters: int = INNER_MAX_ITERS,
) -> tuple[ScalarField, InnerSolveReport]:
    """Unique maximizer Z(phi) of psi -> J(phi, psi) by monotone ascent.

    A step is first tried as Newton on eta = |psi|^(p'-2) psi for
    eta + K dual_map(eta, p) = 1_{A_-} K phi and kept if it raises the inner
    objective and lowers the residual. Otherwise the damped fixed-point step
    toward dual_map(1_{A_-} K(phi - psi), p) is taken, its damping carried over
    from the previous iteration, doubled (up to 1) and halved until the objective
    does not decrease.

    Parameters
    ----------
    phi : ScalarField
        Point on A_+.
    tol_inner : float, optional
        Bound on ||grad_psi||_p; default 1e-9 * max(1, ||phi||_p'^(p'-1)).
    psi0 : ScalarField, optional
        Warm start.
    """
    _check_supports(phi, psi0, op)
    start = None if psi0 is None else psi0.values
    solution = _solve_inner(phi.values, op, tol_inner, start, max_iters)
    return ScalarField(op.grid, solution.psi), solution.report


# ---------------------------------------------------------------------------
# Reduced functional
# ---------------------------------------------------------------------------
def reduced_evaluation(
    phi: FloatArray,
    lam: float,
    op: WeightedOperator,
    tol_inner: float | None = None,
    psi0: FloatArray | None = None,
) -> ReducedEvaluation:
    """Value, maximizer and gradient of J~ at ``phi`` from a single inner solve."""
    _check_lambda(lam)
    pc = op.p_conj
    solution = _solve_inner(phi, op, tol_inner, psi0, INNER_MAX_ITERS)
    outer = lam ** (1.0 - pc)
    value = outer / pc * op.norm(phi, pc) ** pc + solution.report.objective
    coupling = np.where(op.aplus.indicator, solution.k_phi - solution.k_psi, 0.0)
    gradient = outer * dual_map_values(phi, pc) - coupling
    return ReducedEvaluation(value, solution.psi, gradient, solution.report)


def eval_reduced(
    phi: ScalarField,
    lam: float,
    op: WeightedOperator,
    tol_inner: float | None = None,
    *,
    psi0: ScalarField | None = None,
) -> tuple[float, ScalarField]:
    """J~(phi) = J(phi, Z(phi)) and Z(phi)."""
    _check_supports(phi, psi0, op)
    evaluation = reduced_evaluation(phi.values, lam, op, tol_inner, None if psi0 is None else psi0.values)
    return evaluation.value, ScalarField(op.grid, evaluation.z)


def grad_reduced(
    phi: ScalarField,
    lam: float,
    op: WeightedOperator,
    tol_inner: float | None = None,
    *,
    psi0: ScalarField | None = None,
) -> ScalarField:
    """grad_phi evaluated at (phi, Z(phi))."""
    _check_supports(phi, psi0, op)
    evaluation = reduced_evaluation(phi.values, lam, op, tol_inner, None if psi0 is None else psi0.values)
    return ScalarField(op.grid, evaluation.gradient)

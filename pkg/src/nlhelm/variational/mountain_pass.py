"""Mountain-pass search for critical points of the reduced functional J~_lambda.

A discrete path from v1 = 0 to a far endpoint v2 with J~(v2) <= 0 is deformed by
moving its highest node downhill (Armijo line search along a descent direction),
nudging the two neighbors, and re-spacing the nodes by L^p' arclength. A move of
the highest node is at most half the gap to its nearer neighbor and at most
r_lambda, and it may not take a maximum above the sphere bound below it.

The highest interior node is then refined on ray maxima (s -> J~(s phi) maximized
at every accepted step): descent steps are taken in xi = |phi|^(p'-2) phi, and
close to the saddle Newton steps with the dense blocks of K finish the solve.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy import linalg, optimize

from nlhelm.errors import ConvergenceError, DomainError, EndpointError, NLHelmError
from nlhelm.numerics.grid_field import FloatArray, Grid, ScalarField, dual_map_values
from nlhelm.operators.birman_schwinger import MethodConstants, WeightedOperator
from nlhelm.variational.dual_functional import ReducedEvaluation, reduced_evaluation

logger = logging.getLogger(__name__)

DESCENT_MODES = ("duality", "preconditioned")
ENDPOINT_MODES = ("analytic", "ray")

MIN_NODES = 9
BETA_EPS = 1e-12
ENDPOINT_TOL = 1e-8
MAX_DOUBLINGS = 200
PATH_SLACK = 1e-12
LEVEL_MONOTONE_TOL = 1e-6
NONTRIVIAL_FRACTION = 1e-3
RESTART_PERTURBATION = 0.1
STALL_WINDOW = 25
STALL_DECREASE = 1e-8
MIN_STEP = 1e-14
STEP_NEIGHBOR_FRACTION = 0.5
# Relative gradient below which deformation hands the path maximum to refinement.
DEFORM_HANDOFF = 1e-3
# Relative gradient below which refinement tries Newton steps.
NEWTON_ENTRY = 1e-2
NEWTON_HALVINGS = 6
NEWTON_NORM_RATIO = 0.5
VALUE_NOISE = 1e-13
_RAY_BRACKET_STEPS = 40


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class MpOptions:
    nodes: int = 17
    tol_mp: float = 1e-7
    max_iters: int = 5000
    restarts: int = 5
    seed: int = 0
    tol_inner: float | None = None
    descent: str = "duality"
    endpoint: str = "analytic"
    redistribute_every: int = 10
    neighbor_fraction: float = 0.2
    armijo: float = 1e-4

    def __post_init__(self) -> None:
        if self.nodes < MIN_NODES:
            raise DomainError(f"mountain-pass path needs >= {MIN_NODES} nodes, got {self.nodes}")
        if not self.tol_mp > 0:
            raise DomainError(f"tol_mp must be > 0, got {self.tol_mp}")
        if self.max_iters < 1 or self.restarts < 0 or self.redistribute_every < 1:
            raise DomainError("max_iters and redistribute_every must be >= 1, restarts >= 0")
        if self.descent not in DESCENT_MODES:
            raise DomainError(f"descent must be one of {DESCENT_MODES}, got {self.descent!r}")
        if self.endpoint not in ENDPOINT_MODES:
            raise DomainError(f"endpoint must be one of {ENDPOINT_MODES}, got {self.endpoint!r}")
        if not 0 < self.armijo < 1:
            raise DomainError(f"armijo constant must lie in (0, 1), got {self.armijo}")


@dataclass(frozen=True, eq=False)
class MpPath:
    """Ordered path nodes on A_+ with their J~ values; node 0 is the zero field."""

    nodes: tuple[ScalarField, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.nodes) < MIN_NODES:
            raise DomainError(f"path needs >= {MIN_NODES} nodes, got {len(self.nodes)}")
        if len(self.values) != len(self.nodes):
            raise DomainError("path values and nodes differ in length")

    @property
    def endpoint(self) -> ScalarField:
        return self.nodes[-1]


@dataclass(frozen=True, eq=False)
class MpResult:
    lam: float
    phi_star: ScalarField
    psi_star: ScalarField
    level: float
    grad_norm: float
    grad_tol: float
    restarts_used: int
    converged: bool
    iterations: int = 0
    max_history: tuple[float, ...] = ()
    path: MpPath | None = None
    endpoint_norm: float = math.nan
    message: str = ""

    @classmethod
    def failure(cls, lam: float, grid: Grid, message: str) -> "MpResult":
        zeros = grid.zeros()
        return cls(lam, zeros, zeros, math.nan, math.nan, math.nan, 0, False, message=message)


class _Step(NamedTuple):
    t: float
    phi: FloatArray
    evaluation: ReducedEvaluation


@dataclass
class _Attempt:
    nodes: list[FloatArray]
    evals: list[ReducedEvaluation]
    phi: FloatArray | None = None
    evaluation: ReducedEvaluation | None = None
    grad_norm: float = math.inf
    grad_tol: float = math.inf
    converged: bool = False
    iterations: int = 0
    history: list[float] = field(default_factory=list)
    message: str = ""

    @property
    def merit(self) -> float:
        return self.grad_norm / self.grad_tol if self.grad_tol > 0 else math.inf


# ---------------------------------------------------------------------------
# Geometry of the reduced functional
# ---------------------------------------------------------------------------
def radius_lambda(consts: MethodConstants, lam: float) -> float:
    """r_lambda = (lambda^(p'-1) alpha)^(1/(p'-2)), radius of the small sphere."""
    pc = consts.p_conj
    return (lam ** (pc - 1.0) * consts.alpha) ** (1.0 / (pc - 2.0))


def sphere_infimum_bound(consts: MethodConstants, lam: float) -> float:
    """Lower bound alpha (1/p' - 1/2) (lambda^(p'-1) alpha)^(2/(p'-2)) for J~ on ||phi|| = r_lambda."""
    if not consts.alpha > 0:
        raise DomainError(f"alpha must be > 0, got {consts.alpha}")
    if not lam > 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    pc = consts.p_conj
    return consts.alpha * (1.0 / pc - 0.5) * (lam ** (pc - 1.0) * consts.alpha) ** (2.0 / (pc - 2.0))


def _check_admissible(consts: MethodConstants, lam: float) -> None:
    if not consts.alpha > 0:
        raise DomainError(f"alpha must be > 0, got {consts.alpha}")
    if not lam > consts.lambda0:
        raise DomainError(f"lambda = {lam} must exceed lambda0 = {consts.lambda0}")


def make_endpoint(
    consts: MethodConstants,
    lam: float,
    op: WeightedOperator,
    tol_inner: float | None = None,
    *,
    strategy: str = "analytic",
) -> ScalarField:
    """Far endpoint v2 of the mountain-pass paths.

    ``analytic`` uses v2 = R phi0 with R = (alpha beta^-p / 2)^(1/(p-2)) when
    beta > 1e-12; otherwise (and always for ``ray``) t phi0 with t doubled from 1
    until J~(t phi0) <= 0 beyond r_lambda.

    Raises
    ------
    EndpointError
        If J~(v2) > 1e-8 or ||v2||_p' <= r_lambda on this grid.
    """
    _check_admissible(consts, lam)
    if strategy not in ENDPOINT_MODES:
        raise DomainError(f"endpoint strategy must be one of {ENDPOINT_MODES}, got {strategy!r}")
    p, pc = consts.p, consts.p_conj
    r_lam = radius_lambda(consts, lam)
    phi0 = consts.phi0.values
    if strategy == "analytic" and consts.beta > BETA_EPS:
        radius = (0.5 * consts.alpha * consts.beta ** (-p)) ** (1.0 / (p - 2.0))
        value = reduced_evaluation(radius * phi0, lam, op, tol_inner).value
    else:
        radius = 1.0
        for _ in range(MAX_DOUBLINGS):
            value = reduced_evaluation(radius * phi0, lam, op, tol_inner).value
            if value <= 0.0 and radius > r_lam:
                break
            radius *= 2.0
        else:
            raise EndpointError(f"no t <= 2^{MAX_DOUBLINGS} with J~(t phi0) <= 0 at lambda={lam}")
    norm = radius * op.norm(phi0, pc)
    logger.debug("endpoint (%s) at lambda=%g: ||v2||=%.6g r_lambda=%.6g J~(v2)=%.6g",
                 strategy, lam, norm, r_lam, value)
    if value > ENDPOINT_TOL:
        raise EndpointError(f"J~(v2) = {value:.3g} > {ENDPOINT_TOL:g} at lambda={lam}; grid too coarse?")
    if not norm > r_lam:
        raise EndpointError(f"||v2|| = {norm:.6g} does not exceed r_lambda = {r_lam:.6g} at lambda={lam}")
    return ScalarField(op.grid, radius * phi0)


# ---------------------------------------------------------------------------
# Deformation machinery
# ---------------------------------------------------------------------------
class _Evaluator:
    def __init__(self, op: WeightedOperator, lam: float, tol_inner: float | None) -> None:
        self.op = op
        self.lam = lam
        self.tol_inner = tol_inner
        self.count = 0
        self.failures = 0

    def __call__(self, phi: FloatArray, psi0: FloatArray | None = None) -> ReducedEvaluation:
        self.count += 1
        return reduced_evaluation(phi, self.lam, self.op, self.tol_inner, psi0)

    def safe(self, phi: FloatArray, psi0: FloatArray | None = None) -> ReducedEvaluation | None:
        """Like calling, but an inner solve that does not converge rejects the point."""
        try:
            return self(phi, psi0)
        except ConvergenceError as exc:
            self.failures += 1
            logger.debug("trial point rejected: %s", exc)
            return None


class _Search:
    """One restartable mountain-pass search at fixed lambda."""

    def __init__(self, lam: float, op: WeightedOperator, opts: MpOptions, endpoint: FloatArray,
                 consts: MethodConstants) -> None:
        self.lam = lam
        self.op = op
        self.opts = opts
        self.evaluate = _Evaluator(op, lam, opts.tol_inner)
        self.p, self.pc = op.p, op.p_conj
        self.endpoint_norm = op.norm(endpoint, self.pc)
        self.r_lam = radius_lambda(consts, lam)
        self.floor = sphere_infimum_bound(consts, lam)

    # -- directions and line search -------------------------------------
    def gradient_scale(self, phi: FloatArray) -> float:
        return self.lam ** (1.0 - self.pc) * self.op.norm(phi, self.pc) ** (self.pc - 1.0)

    def grad_tol(self, phi: FloatArray) -> float:
        return self.opts.tol_mp * max(1.0, self.gradient_scale(phi))

    def direction(self, phi: FloatArray, ev: ReducedEvaluation, mode: str) -> tuple[FloatArray, float]:
        gradient = ev.gradient
        if mode == "preconditioned":
            # 1_{A_+} K(phi - Z) recovered from the gradient.
            coupling = self.lam ** (1.0 - self.pc) * dual_map_values(phi, self.pc) - gradient
            d = self.lam * dual_map_values(coupling, self.p) - phi
        else:
            gnorm = self.op.norm(gradient, self.p)
            if gnorm == 0.0:
                return np.zeros_like(phi), 0.0
            d = -dual_map_values(gradient, self.p) / gnorm ** (self.p - 1.0)
        return d, self.op.pair(gradient, d)

    def step_cap(self, nodes: list[FloatArray], k: int) -> float:
        """Longest L^p' move of node k: half the gap to its nearer neighbor, at most r_lambda."""
        gaps = [self.op.norm(nodes[k] - nodes[j], self.pc) for j in (k - 1, k + 1)]
        return min(STEP_NEIGHBOR_FRACTION * min(gaps), self.r_lam)

    def armijo(self, phi: FloatArray, ev: ReducedEvaluation, d: FloatArray, slope: float,
               t: float, t_max: float) -> _Step | None:
        if not slope < 0.0:
            return None
        # A path maximum above the sphere bound must stay above it.
        floor = self.floor if ev.value >= self.floor else -math.inf
        while t >= MIN_STEP * t_max:
            candidate = phi + t * d
            trial = self.evaluate.safe(candidate, ev.z)
            if (trial is not None and trial.value >= floor
                    and trial.value <= ev.value + self.opts.armijo * t * slope):
                return _Step(t, candidate, trial)
            t *= 0.5
        return None

    # -- path deformation ----------------------------------------------
    def deform(self, nodes: list[FloatArray]) -> _Attempt:
        evals = [self.evaluate(nodes[0])]
        for node in nodes[1:]:
            evals.append(self.evaluate(node, evals[-1].z))
        attempt = _Attempt(nodes, evals)
        mode = self.opts.descent
        last = len(nodes) - 1
        length_prev = math.inf
        for it in range(1, self.opts.max_iters + 1):
            attempt.iterations = it
            values = [ev.value for ev in evals]
            k = int(np.argmax(values))
            top = values[k]
            attempt.history.append(top)
            if not 0 < k < last:
                attempt.message = "path maximum at an endpoint"
                return attempt
            gnorm = self.op.norm(evals[k].gradient, self.p)
            tol = self.grad_tol(nodes[k])
            if gnorm <= tol:
                attempt.message = "deformation converged"
                self._finish(attempt, nodes[k], evals[k], gnorm, tol, converged=True)
                return attempt
            if gnorm <= DEFORM_HANDOFF * self.gradient_scale(nodes[k]):
                attempt.message = "deformation handed over to refinement"
                return attempt

            d, slope = self.direction(nodes[k], evals[k], mode)
            d_norm = self.op.norm(d, self.pc)
            cap = self.step_cap(nodes, k)
            if d_norm == 0.0 or cap == 0.0:
                attempt.message = "no admissible step on the path maximum"
                return attempt
            t_max = cap / d_norm
            if mode == "preconditioned":
                t_max = min(1.0, t_max)
            t0 = min(2.0 * length_prev / d_norm, t_max)
            step = self.armijo(nodes[k], evals[k], d, slope, t0, t_max)
            if step is None:
                attempt.message = "line search failed on the path maximum"
                return attempt
            length_prev = step.t * d_norm
            nodes[k], evals[k] = step.phi, step.evaluation
            for j in (k - 1, k + 1):
                if 0 < j < last:
                    self._nudge(nodes, evals, j, self.opts.neighbor_fraction * length_prev, top, mode)
            if it % self.opts.redistribute_every == 0:
                self._redistribute(nodes, evals)

            new_top = max(ev.value for ev in evals)
            if new_top > top + PATH_SLACK * max(1.0, abs(top)):
                logger.warning("path maximum increased %.15g -> %.15g at iteration %d", top, new_top, it)
            history = attempt.history
            if len(history) > STALL_WINDOW and history[-STALL_WINDOW] - new_top <= STALL_DECREASE * max(1.0, abs(new_top)):
                attempt.message = "deformation stalled"
                return attempt
        attempt.message = "deformation iteration cap"
        return attempt

    def _nudge(self, nodes, evals, j: int, length: float, ceiling: float, mode: str) -> None:
        d, slope = self.direction(nodes[j], evals[j], mode)
        d_norm = self.op.norm(d, self.pc)
        if not slope < 0.0 or d_norm == 0.0:
            return
        candidate = nodes[j] + min(length / d_norm, self.step_cap(nodes, j) / d_norm) * d
        trial = self.evaluate.safe(candidate, evals[j].z)
        if trial is not None and trial.value <= ceiling:
            nodes[j], evals[j] = candidate, trial

    def _redistribute(self, nodes: list[FloatArray], evals: list[ReducedEvaluation]) -> None:
        """Re-space interior nodes uniformly in L^p' arclength; undone if the maximum rises or drops below the sphere bound."""
        lengths = np.array([self.op.norm(b - a, self.pc) for a, b in zip(nodes[:-1], nodes[1:])])
        total = float(lengths.sum())
        if total == 0.0:
            return
        arclength = np.concatenate(([0.0], np.cumsum(lengths)))
        targets = np.linspace(0.0, total, len(nodes))
        new_nodes = [nodes[0]]
        new_evals = [evals[0]]
        for target in targets[1:-1]:
            seg = min(int(np.searchsorted(arclength, target, side="right")) - 1, len(lengths) - 1)
            frac = 0.0 if lengths[seg] == 0.0 else (target - arclength[seg]) / lengths[seg]
            node = (1.0 - frac) * nodes[seg] + frac * nodes[seg + 1]
            ev = self.evaluate.safe(node, evals[seg].z)
            if ev is None:
                return
            new_nodes.append(node)
            new_evals.append(ev)
        new_nodes.append(nodes[-1])
        new_evals.append(evals[-1])
        old_top = max(ev.value for ev in evals)
        new_top = max(ev.value for ev in new_evals)
        if new_top > old_top or (old_top >= self.floor > new_top):
            logger.debug("redistribution reverted (maximum %.15g -> %.15g)", old_top, new_top)
            return
        nodes[:] = new_nodes
        evals[:] = new_evals

    # -- refinement on ray maxima ---------------------------------------
    def _radial_slope(self, phi: FloatArray, s: float, cache: dict) -> float:
        ev = self.evaluate(s * phi, cache.get("z"))
        cache["z"] = ev.z
        return self.op.pair(ev.gradient, phi)

    def ray_maximum(self, phi: FloatArray, ev: ReducedEvaluation) -> tuple[FloatArray, ReducedEvaluation] | None:
        """Maximize s -> J~(s phi) over s > 0 by a sign change of its derivative."""
        cache = {"z": ev.z}
        slope = self.op.pair(ev.gradient, phi)
        if slope == 0.0:
            return phi, ev
        lo = hi = 1.0
        try:
            for _ in range(_RAY_BRACKET_STEPS):
                if slope > 0.0:
                    lo, hi = hi, 2.0 * hi
                    if self._radial_slope(phi, hi, cache) <= 0.0:
                        break
                else:
                    hi, lo = lo, 0.5 * lo
                    if self._radial_slope(phi, lo, cache) >= 0.0:
                        break
            else:
                return None
            try:
                s = optimize.brentq(lambda t: self._radial_slope(phi, t, cache), lo, hi, xtol=1e-14 * hi)
            except ValueError:
                # Re-evaluated end slopes share a sign: the slope at s = 1 is at noise level.
                return phi, ev
            top = s * phi
            return top, self.evaluate(top, cache["z"])
        except ConvergenceError as exc:
            self.evaluate.failures += 1
            logger.debug("ray maximum abandoned: %s", exc)
            return None

    def mirror_step(self, phi: FloatArray, ev: ReducedEvaluation, gnorm: float,
                    eta: float) -> tuple[FloatArray, ReducedEvaluation, float] | None:
        """Descent on ray maxima in xi = |phi|^(p'-2) phi: phi <- ray max of dual_map(xi - eta G, p).

        ``eta = lambda^(p'-1)`` is the full fixed-point step phi <- lambda dual_map(1_{A_+} K(phi - Z), p).
        """
        xi = dual_map_values(phi, self.pc)
        g = ev.gradient
        slope = -(self.p - 1.0) * self.op.pair(np.abs(xi) ** (self.p - 2.0) * g, g)
        if not slope < 0.0:
            return None
        noise = VALUE_NOISE * max(1.0, abs(ev.value))
        floor = MIN_STEP * self.lam ** (self.pc - 1.0)
        while eta >= floor:
            candidate = dual_map_values(xi - eta * g, self.p)
            trial = self.evaluate.safe(candidate, ev.z)
            projected = None if trial is None else self.ray_maximum(candidate, trial)
            if projected is not None:
                value = projected[1].value
                if value <= ev.value + self.opts.armijo * eta * slope or (
                    value <= ev.value + noise and self.op.norm(projected[1].gradient, self.p) < gnorm
                ):
                    return projected[0], projected[1], eta
            eta *= 0.5
        return None

    def newton(self, phi: FloatArray, ev: ReducedEvaluation, gnorm: float) -> tuple[FloatArray, ReducedEvaluation] | None:
        """Newton step on xi - lambda^(p'-1) 1_{A_+} K(phi - Z(phi)) = 0 with dense K blocks.

        The derivative of Z enters through the Schur complement
        K_{+-} E_-^(1/2) (I + E_-^(1/2) K_{--} E_-^(1/2))^(-1) E_-^(1/2) K_{-+}.
        """
        op, p, pc = self.op, self.p, self.pc
        if not op.has_dense_blocks:
            return None
        a = self.lam ** (pc - 1.0)
        plus, minus = op.aplus.indicator, op.aminus.indicator
        xi = dual_map_values(phi[plus], pc)
        root_plus = np.sqrt((p - 1.0) * np.abs(xi) ** (p - 2.0))
        try:
            coupling = op.plus_block
            if not op.aminus.is_empty:
                root_minus = np.sqrt((p - 1.0) * np.abs(dual_map_values(ev.z[minus], pc)) ** (p - 2.0))
                inner = np.eye(root_minus.size) + root_minus[:, None] * op.minus_block * root_minus[None, :]
                scaled = op.cross_block * root_minus[None, :]
                coupling = coupling - scaled @ linalg.solve(inner, scaled.T, assume_a="pos")
            system = np.eye(xi.size) - a * root_plus[:, None] * coupling * root_plus[None, :]
            rhs = -a * ev.gradient[plus]
            s = linalg.solve(system, root_plus * rhs, assume_a="sym")
        except linalg.LinAlgError as exc:
            logger.debug("Newton system unavailable: %s", exc)
            return None
        delta = rhs + a * (coupling @ (root_plus * s))
        norm = op.norm(phi, pc)
        t = 1.0
        for _ in range(NEWTON_HALVINGS):
            candidate = np.zeros_like(phi)
            candidate[plus] = dual_map_values(xi + t * delta, p)
            trial = self.evaluate.safe(candidate, ev.z)
            if (trial is not None and trial.value > 0.0
                    and op.norm(candidate, pc) >= NEWTON_NORM_RATIO * norm
                    and op.norm(trial.gradient, p) <= (1.0 - 0.5 * t) * gnorm):
                return candidate, trial
            t *= 0.5
        return None

    def refine(self, attempt: _Attempt, phi: FloatArray, ev: ReducedEvaluation) -> None:
        projected = self.ray_maximum(phi, ev)
        if projected is None:
            attempt.message += "; ray through the path maximum never descends"
            return
        phi, ev = projected
        full_step = self.lam ** (self.pc - 1.0)
        eta = full_step
        newton_below = math.inf
        for it in range(1, self.opts.max_iters + 1):
            gnorm = self.op.norm(ev.gradient, self.p)
            tol = self.grad_tol(phi)
            self._finish(attempt, phi, ev, gnorm, tol, converged=gnorm <= tol)
            if attempt.converged:
                attempt.message += f"; refined in {it - 1} steps"
                return
            attempt.iterations += 1
            if gnorm <= NEWTON_ENTRY * self.gradient_scale(phi) and gnorm < newton_below:
                polished = self.newton(phi, ev, gnorm)
                if polished is not None:
                    phi, ev = polished
                    continue
                newton_below = 0.1 * gnorm
            accepted = self.mirror_step(phi, ev, gnorm, eta)
            if accepted is None:
                attempt.message += "; refinement stalled"
                return
            phi, ev, used = accepted
            eta = min(full_step, 2.0 * used)
        gnorm = self.op.norm(ev.gradient, self.p)
        tol = self.grad_tol(phi)
        self._finish(attempt, phi, ev, gnorm, tol, converged=gnorm <= tol)
        if not attempt.converged:
            attempt.message += "; refinement iteration cap"

    def _finish(self, attempt: _Attempt, phi: FloatArray, ev: ReducedEvaluation,
                gnorm: float, tol: float, *, converged: bool) -> None:
        attempt.phi, attempt.evaluation = phi, ev
        attempt.grad_norm, attempt.grad_tol = gnorm, tol
        attempt.converged = converged

    def run(self, nodes: list[FloatArray]) -> _Attempt:
        attempt = self.deform(nodes)
        if attempt.converged:
            return attempt
        # Highest interior node, also when the path maximum sits at an endpoint.
        values = [ev.value for ev in attempt.evals]
        k = 1 + int(np.argmax(values[1:-1]))
        top, ev = attempt.nodes[k], attempt.evals[k]
        self._finish(attempt, top, ev, self.op.norm(ev.gradient, self.p), self.grad_tol(top), converged=False)
        self.refine(attempt, top, ev)
        return attempt


def _perturbed(nodes: list[FloatArray], op: WeightedOperator, rng: np.random.Generator) -> list[FloatArray]:
    """Add eps sin(pi s) xi to the interior nodes; xi random on A_+ with unit L^p' norm."""
    xi = np.where(op.aplus.indicator, rng.standard_normal(op.grid.shape), 0.0)
    xi /= op.norm(xi, op.p_conj)
    eps = RESTART_PERTURBATION * max(op.norm(node, op.p_conj) for node in nodes)
    last = len(nodes) - 1
    out = [nodes[0]]
    for j in range(1, last):
        out.append(nodes[j] + eps * math.sin(math.pi * j / last) * xi)
    out.append(nodes[-1])
    return out


def _straight_path(endpoint: FloatArray, count: int) -> list[FloatArray]:
    return [s * endpoint for s in np.linspace(0.0, 1.0, count)]


# ---------------------------------------------------------------------------
# Public search
# ---------------------------------------------------------------------------
def find_critical_point(
    lam: float,
    consts: MethodConstants,
    op: WeightedOperator,
    opts: MpOptions | None = None,
    *,
    endpoint: ScalarField | None = None,
    initial_path: Sequence[ScalarField] | None = None,
    stream: int = 0,
) -> MpResult:
    """Critical point of J~_lambda at the mountain-pass level.

    Never raises for non-convergence: after ``max_iters`` per attempt and all
    restarts the best iterate comes back with ``converged=False``. Restart
    perturbations draw from ``SeedSequence([seed, stream, restart])``.
    """
    opts = opts or MpOptions()
    _check_admissible(consts, lam)
    if endpoint is None:
        endpoint = make_endpoint(consts, lam, op, opts.tol_inner, strategy=opts.endpoint)
    v2 = endpoint.values
    if initial_path is None:
        nodes = _straight_path(v2, opts.nodes)
    else:
        nodes = [np.array(node.values) for node in initial_path]
        if len(nodes) < MIN_NODES:
            raise DomainError(f"initial path needs >= {MIN_NODES} nodes, got {len(nodes)}")
        nodes[0] = np.zeros(op.grid.shape)
        nodes[-1] = v2

    search = _Search(lam, op, opts, v2, consts)
    best: _Attempt | None = None
    restarts_used = 0
    messages: list[str] = []
    for restart in range(opts.restarts + 1):
        if restart:
            rng = np.random.default_rng(np.random.SeedSequence([opts.seed, stream, restart]))
            nodes = _perturbed(nodes, op, rng)
        restarts_used = restart
        try:
            attempt = search.run(list(nodes))
        except ConvergenceError as exc:
            logger.debug("lambda=%g attempt %d: inner solve failed: %s", lam, restart, exc)
            messages.append(f"attempt {restart}: {exc}")
            continue
        messages.append(f"attempt {restart}: {attempt.message}")
        logger.debug("lambda=%g attempt %d: %s (|G|=%.3g tol=%.3g, %d iterations)",
                     lam, restart, attempt.message, attempt.grad_norm, attempt.grad_tol, attempt.iterations)
        if best is None or attempt.converged or attempt.merit < best.merit:
            best = attempt
        nodes = attempt.nodes
        if attempt.converged:
            break

    if best is None or best.phi is None:
        return replace(
            MpResult.failure(lam, op.grid, "; ".join(messages)),
            restarts_used=restarts_used,
            endpoint_norm=search.endpoint_norm,
        )

    pc = op.p_conj
    phi_norm = op.norm(best.phi, pc)
    level = best.evaluation.value
    converged = best.converged
    if converged and not (level > 0.0 or phi_norm >= radius_lambda(consts, lam) * (1.0 - NONTRIVIAL_FRACTION)):
        logger.warning("lambda=%g: search ended at a trivial critical point (level %.3g)", lam, level)
        converged = False
        messages.append("trivial critical point")
    path = MpPath(
        tuple(ScalarField(op.grid, node) for node in best.nodes),
        tuple(ev.value for ev in best.evals),
    )
    logger.info(
        "lambda=%g: %s level=%.10g |G|=%.3g restarts=%d iterations=%d evaluations=%d (%d rejected)",
        lam, "converged" if converged else "NOT converged", level, best.grad_norm,
        restarts_used, best.iterations, search.evaluate.count, search.evaluate.failures,
    )
    return MpResult(
        lam=lam,
        phi_star=ScalarField(op.grid, best.phi),
        psi_star=ScalarField(op.grid, best.evaluation.z),
        level=level,
        grad_norm=best.grad_norm,
        grad_tol=best.grad_tol,
        restarts_used=restarts_used,
        converged=converged,
        iterations=best.iterations,
        max_history=tuple(best.history),
        path=path,
        endpoint_norm=search.endpoint_norm,
        message="; ".join(messages),
    )


def _rescaled_path(path: MpPath, endpoint: ScalarField) -> list[ScalarField]:
    old = path.endpoint.values
    factor = 1.0
    old_norm = float(np.linalg.norm(old))
    if old_norm > 0.0:
        factor = float(np.linalg.norm(endpoint.values)) / old_norm
    return [node * factor for node in path.nodes]


def lambda_sweep(
    lambdas: Sequence[float],
    consts: MethodConstants,
    op: WeightedOperator,
    opts: MpOptions | None = None,
    *,
    warm_start: bool = True,
    workers: int = 1,
) -> list[MpResult]:
    """find_critical_point for every lambda in ascending order.

    With ``warm_start`` each search starts from the previous converged path
    rescaled to the new endpoint and the sweep runs sequentially; otherwise
    lambdas are independent and may run on ``workers`` threads. A failing lambda
    is recorded and the sweep continues.
    """
    opts = opts or MpOptions()
    ordered = sorted(float(lam) for lam in lambdas)

    def solve(stream: int, lam: float, previous: MpResult | None) -> MpResult:
        try:
            endpoint = make_endpoint(consts, lam, op, opts.tol_inner, strategy=opts.endpoint)
            initial = None
            if previous is not None and previous.converged and previous.path is not None:
                initial = _rescaled_path(previous.path, endpoint)
            return find_critical_point(lam, consts, op, opts, endpoint=endpoint, initial_path=initial, stream=stream)
        except NLHelmError as exc:
            logger.warning("lambda=%g failed: %s", lam, exc)
            return MpResult.failure(lam, op.grid, f"{type(exc).__name__}: {exc}")

    if warm_start or workers <= 1 or len(ordered) <= 1:
        results: list[MpResult] = []
        previous = None
        for stream, lam in enumerate(ordered):
            result = solve(stream, lam, previous if warm_start else None)
            results.append(result)
            if result.converged:
                previous = result
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda item: solve(item[0], item[1], None), enumerate(ordered)))

    converged = [r for r in results if r.converged]
    for a, b in zip(converged, converged[1:]):
        if b.level > a.level + LEVEL_MONOTONE_TOL:
            logger.warning("levels not nonincreasing: c(%g)=%.10g < c(%g)=%.10g", a.lam, a.level, b.lam, b.level)
    return results

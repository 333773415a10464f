"""Node functions for the solver pipeline graph.

Each function receives the full ``RunState`` and returns a *partial*
dict update that LangGraph merges back into the state. Nodes never raise:
failures become an ``errors`` entry, a FAILED audit entry and a
``failure_code`` that routes the graph to output emission.
"""
from __future__ import annotations

import logging
import math
from datetime import datetime, timezone

import numpy as np

from nlhelm.errors import DomainError
from nlhelm.numerics.grid_field import ScalarField
from nlhelm.operators.birman_schwinger import (
    WeightedOperator,
    check_negative_positivity,
    compute_constants,
)
from nlhelm.operators.resolvent import build, estimate_operator_norm
from nlhelm.orchestrator.state import (
    EXIT_CONFIG,
    EXIT_NO_CONVERGENCE,
    EXIT_OK,
    EXIT_POSITIVITY,
    MODE_CONSTANTS,
    RunState,
)
from nlhelm.outputs import RunSummary, SummaryRow, emit_outputs
from nlhelm.variational.mountain_pass import lambda_sweep, radius_lambda, sphere_infimum_bound
from nlhelm.variational.reconstruction import reconstruct
from nlhelm.weights.geometry import diameter_criterion, geometry_report
from nlhelm.weights.profiles import SUPPORT_FRACTION, realize

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------
def _ts() -> str:
    """ISO-8601 UTC timestamp."""
    return datetime.now(timezone.utc).isoformat()


def _failed(audit_entry: dict, stage: str, exc: Exception, code: int = EXIT_NO_CONVERGENCE) -> dict:
    logger.error("%s failed: %s", stage, exc)
    audit_entry["action"] = f"{stage} FAILED"
    audit_entry["output_summary"] = f"{type(exc).__name__}: {exc}"
    return {
        "current_phase": f"{stage.lower()}_error",
        "errors": [f"{stage}: {exc}"],
        "audit_log": [audit_entry],
        "failure_code": code,
    }


# ---------------------------------------------------------------------------
# Node: Realize weight
# ---------------------------------------------------------------------------
def realize_node(state: RunState) -> dict:
    """Sample Q on the run grid."""
    config = state["config"]
    audit_entry = {"timestamp": _ts(), "node": "realize", "action": f"Realizing weight '{config.weight.kind}'"}
    try:
        Q = realize(config.weight, config.grid)
        if not np.any(Q.values > 0):
            raise DomainError("weight has no focusing part (A_+ is empty)")
        audit_entry["output_summary"] = (
            f"grid N={config.N} M={config.M} L={config.L:g}; "
            f"{int(np.count_nonzero(Q.values > 0))} cells Q>0, {int(np.count_nonzero(Q.values < 0))} cells Q<0"
        )
        return {"weight": Q, "current_phase": "realize_done", "audit_log": [audit_entry]}
    except Exception as exc:
        return _failed(audit_entry, "Realize", exc, EXIT_CONFIG)


# ---------------------------------------------------------------------------
# Node: Geometry
# ---------------------------------------------------------------------------
def geometry_node(state: RunState) -> dict:
    """diam(A_-), dist(A_+, A_-) and the diameter criterion (k = 1 and k-form)."""
    config = state["config"]
    audit_entry = {"timestamp": _ts(), "node": "geometry", "action": "Measuring sign regions"}
    try:
        report = geometry_report(state["weight"])
        criterion = diameter_criterion(report)
        update = {"geometry": report, "criterion": criterion}
        k = config.wavenumber
        if k != 1.0:
            update["scaled_criterion"] = diameter_criterion(report, k)
        if not criterion.satisfied:
            logger.warning(
                "diameter criterion not met: diam(A_-) + h sqrt(N) = %.6g > y = %.6g; relying on the PSD check",
                criterion.diameter_bound, criterion.limit,
            )
        audit_entry["output_summary"] = (
            f"diam(A_-)={report.diam_aminus:.6g} ({'exact' if report.exact else 'bound'}), "
            f"dist(A_+,A_-)={report.dist_apm:.6g}, y={criterion.y_zero:.12g}, "
            f"criterion {'met' if criterion.satisfied else 'not met'}"
        )
        return {**update, "current_phase": "geometry_done", "audit_log": [audit_entry]}
    except Exception as exc:
        return _failed(audit_entry, "Geometry", exc)


# ---------------------------------------------------------------------------
# Node: Operators
# ---------------------------------------------------------------------------
def operators_node(state: RunState) -> dict:
    """Build the resolvent, the weighted operator K and the norm witness."""
    config = state["config"]
    audit_entry = {"timestamp": _ts(), "node": "operators", "action": "Building resolvent and K"}
    try:
        grid = config.grid
        resolvent = build(grid)
        op = WeightedOperator.from_weight(resolvent, state["weight"], config.p)
        support = ScalarField(grid, grid.window(SUPPORT_FRACTION).indicator)
        witness = estimate_operator_norm(resolvent, config.p, rng=np.random.default_rng(config.seed), support=support)
        audit_entry["output_summary"] = (
            f"origin cell value {resolvent.origin_cell_value:.6g}; "
            f"empirical ||R||_(p'->p) >= {witness:.6g}"
        )
        return {
            "operator": op,
            "resolvent_norm": witness,
            "current_phase": "operators_done",
            "audit_log": [audit_entry],
        }
    except Exception as exc:
        return _failed(audit_entry, "Operators", exc)


# ---------------------------------------------------------------------------
# Node: Positivity on A_-
# ---------------------------------------------------------------------------
def positivity_node(state: RunState) -> dict:
    """PSD check of the form of K on A_-; a failure aborts the sweep."""
    audit_entry = {"timestamp": _ts(), "node": "positivity", "action": "Checking the form of K on A_-"}
    try:
        min_eig, passed = check_negative_positivity(state["operator"])
        positivity = {"min_eigenvalue": min_eig, "passed": passed}
        audit_entry["output_summary"] = f"min eigenvalue {min_eig:.6g} -> {'pass' if passed else 'FAIL'}"
        update = {"positivity": positivity, "audit_log": [audit_entry]}
        if not passed:
            audit_entry["action"] = "Positivity FAILED"
            return {
                **update,
                "current_phase": "positivity_failed",
                "errors": [f"Positivity: form of K on A_- has eigenvalue {min_eig:.6g} < 0; sweep aborted"],
                "failure_code": EXIT_POSITIVITY,
            }
        return {**update, "current_phase": "positivity_done"}
    except Exception as exc:
        return _failed(audit_entry, "Positivity", exc)


# ---------------------------------------------------------------------------
# Node: Constants
# ---------------------------------------------------------------------------
def constants_node(state: RunState) -> dict:
    """alpha, beta, lambda0 and the admissible lambdas above lambda0."""
    config = state["config"]
    audit_entry = {"timestamp": _ts(), "node": "constants", "action": f"Computing alpha, beta ({config.seeds} seeds)"}
    try:
        consts = compute_constants(state["operator"], config.seeds, seed=config.seed, workers=state.get("workers", 1))
        admissible = [lam for lam in config.lambdas if lam > consts.lambda0]
        skipped = [lam for lam in config.lambdas if lam <= consts.lambda0]
        for lam in skipped:
            logger.warning("lambda=%g <= lambda0=%.6g skipped", lam, consts.lambda0)
        audit_entry["output_summary"] = (
            f"alpha={consts.alpha:.10g} beta={consts.beta:.10g} lambda0={consts.lambda0:.10g}; "
            f"{len(admissible)} admissible, {len(skipped)} skipped"
        )
        return {
            "constants": consts,
            "admissible_lambdas": admissible,
            "skipped_lambdas": skipped,
            "current_phase": "constants_done",
            "audit_log": [audit_entry],
        }
    except Exception as exc:
        return _failed(audit_entry, "Constants", exc)


# ---------------------------------------------------------------------------
# Node: Lambda sweep
# ---------------------------------------------------------------------------
def sweep_node(state: RunState) -> dict:
    """Mountain-pass search for every admissible lambda."""
    config = state["config"]
    lambdas = state.get("admissible_lambdas", [])
    audit_entry = {"timestamp": _ts(), "node": "sweep", "action": f"Mountain-pass sweep over {len(lambdas)} lambda(s)"}
    try:
        results = lambda_sweep(
            lambdas, state["constants"], state["operator"], config.mp,
            warm_start=config.warm_start, workers=state.get("workers", 1),
        )
        converged = sum(1 for r in results if r.converged)
        audit_entry["output_summary"] = f"{converged}/{len(results)} converged"
        update = {"results": results, "current_phase": "sweep_done", "audit_log": [audit_entry]}
        failed = [f"Sweep: lambda={r.lam:g}: {r.message}" for r in results if not r.converged]
        if not lambdas:
            failed.append("Sweep: no requested lambda exceeds lambda0")
        if failed:
            update["errors"] = failed
        return update
    except Exception as exc:
        return _failed(audit_entry, "Sweep", exc)


# ---------------------------------------------------------------------------
# Node: Reconstruct
# ---------------------------------------------------------------------------
def reconstruct_node(state: RunState) -> dict:
    """Primal solutions and residuals, isolated per lambda."""
    config = state["config"]
    op = state["operator"]
    audit_entry = {"timestamp": _ts(), "node": "reconstruct", "action": "Rebuilding u and residuals"}
    records, errors = [], []
    for result in state.get("results", []):
        if not math.isfinite(result.level):
            records.append(None)
            continue
        try:
            records.append(reconstruct(result, op, config.wavenumber))
        except Exception as exc:
            logger.error("reconstruction at lambda=%g failed: %s", result.lam, exc)
            errors.append(f"Reconstruct: lambda={result.lam:g}: {exc}")
            records.append(None)
    audit_entry["output_summary"] = f"{sum(r is not None for r in records)} solution(s) reconstructed"
    update = {"records": records, "current_phase": "reconstruct_done", "audit_log": [audit_entry]}
    if errors:
        update["errors"] = errors
    return update


# ---------------------------------------------------------------------------
# Node: Emit
# ---------------------------------------------------------------------------
def _constants_table(state: RunState) -> dict:
    config = state["config"]
    grid = config.grid
    table = {"N": config.N, "M": config.M, "L": config.L, "h": grid.h, "p": config.p, "wavenumber": config.wavenumber}
    report = state.get("geometry")
    if report is not None:
        table.update(cells_aplus=report.cells_aplus, cells_aminus=report.cells_aminus,
                     diam_aminus=report.diam_aminus, diam_exact=report.exact, dist_apm=report.dist_apm)
    criterion = state.get("criterion")
    if criterion is not None:
        table.update(y_zero=criterion.y_zero, criterion_bound=criterion.diameter_bound,
                     criterion_met=criterion.satisfied)
    scaled = state.get("scaled_criterion")
    if scaled is not None:
        table.update(criterion_limit_k=scaled.limit, criterion_bound_k=scaled.diameter_bound,
                     criterion_met_k=scaled.satisfied)
    if "resolvent_norm" in state:
        table["resolvent_norm_witness"] = state["resolvent_norm"]
    positivity = state.get("positivity")
    if positivity is not None:
        table.update(min_eigenvalue=positivity["min_eigenvalue"], positivity_passed=positivity["passed"])
    consts = state.get("constants")
    if consts is not None:
        table.update(alpha=consts.alpha, beta=consts.beta, lambda0=consts.lambda0)
    return table


def _rows(state: RunState) -> list[SummaryRow]:
    consts = state.get("constants")
    records = state.get("records") or []
    rows = []
    for index, result in enumerate(state.get("results", [])):
        record = records[index] if index < len(records) else None
        nan = math.nan
        u_norm, phi_norm, psi_norm = record.norms if record is not None else (nan, nan, nan)
        rows.append(SummaryRow(
            lam=result.lam,
            converged=result.converged,
            level=result.level,
            phi_norm=phi_norm,
            psi_norm=psi_norm,
            u_norm_p=u_norm,
            res_integral=record.residual_integral if record is not None else nan,
            res_pde=record.residual_pde if record is not None else nan,
            iters=result.iterations,
            restarts=result.restarts_used,
            grad_norm=result.grad_norm,
            grad_tol=result.grad_tol,
            chain_identity=record.chain_identity if record is not None else nan,
            r_lambda=radius_lambda(consts, result.lam) if consts is not None else nan,
            sphere_bound=sphere_infimum_bound(consts, result.lam) if consts is not None else nan,
            endpoint_norm=result.endpoint_norm,
            res_pde_k=record.residual_pde_scaled if record is not None else None,
            message=result.message,
        ))
    return rows


def _exit_code(state: RunState, rows: list[SummaryRow]) -> int:
    failure = state.get("failure_code")
    if failure:
        return failure
    if state.get("mode") == MODE_CONSTANTS:
        return EXIT_OK
    return EXIT_OK if any(row.converged for row in rows) else EXIT_NO_CONVERGENCE


def emit_node(state: RunState) -> dict:
    """Assemble the RunSummary and write every output file."""
    config = state["config"]
    output_dir = state["output_dir"]
    audit_entry = {"timestamp": _ts(), "node": "emit", "action": f"Writing outputs to {output_dir}"}
    rows = _rows(state)
    summary = RunSummary(
        mode=state.get("mode", "solve"),
        constants=_constants_table(state),
        rows=rows,
        skipped_lambdas=list(state.get("skipped_lambdas", [])),
        errors=list(state.get("errors", [])),
        exit_code=_exit_code(state, rows),
        output_dir=output_dir,
    )
    update: dict = {"summary": summary, "exit_code": summary.exit_code, "current_phase": "done"}
    try:
        written = emit_outputs(summary, state.get("records") or [], output_dir, write_fields=config.write_fields)
        audit_entry["output_summary"] = f"{len(written)} file(s); exit code {summary.exit_code}"
    except Exception as exc:
        audit_entry["action"] = "Emit FAILED"
        audit_entry["output_summary"] = str(exc)
        summary.errors.append(f"Emit: {exc}")
        update["errors"] = [f"Emit: {exc}"]
    update["audit_log"] = [audit_entry]
    return update

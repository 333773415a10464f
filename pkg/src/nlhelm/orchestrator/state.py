"""Shared state schema for the solver pipeline graph.

Uses ``Annotated`` reducers so list fields accumulate (append)
rather than overwrite across node transitions.
"""
from __future__ import annotations

import operator
from typing import Annotated, Any, TypedDict

# Exit codes of a run.
EXIT_OK = 0
EXIT_POSITIVITY = 2
EXIT_CONFIG = 3
EXIT_NO_CONVERGENCE = 4

MODE_SOLVE = "solve"
MODE_CONSTANTS = "constants"


class RunState(TypedDict, total=False):
    """State passed between the pipeline nodes.

    ``audit_log`` and ``errors`` accumulate; every other field is
    last-writer-wins.
    """

    # ── Accumulative fields (append-only) ─────────────────────────
    audit_log: Annotated[list[dict], operator.add]
    errors: Annotated[list[str], operator.add]

    # ── Inputs ────────────────────────────────────────────────────
    config: Any
    mode: str
    workers: int
    output_dir: str

    # ── Stage outputs ─────────────────────────────────────────────
    weight: Any
    geometry: Any
    criterion: Any
    scaled_criterion: Any
    operator: Any
    resolvent_norm: float
    positivity: dict
    constants: Any
    admissible_lambdas: list[float]
    skipped_lambdas: list[float]
    results: list
    records: list
    summary: Any

    # ── Control flow ──────────────────────────────────────────────
    current_phase: str
    failure_code: int
    exit_code: int

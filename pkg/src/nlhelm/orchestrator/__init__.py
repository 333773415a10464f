"""LangGraph pipeline: weight -> geometry -> operators -> positivity -> constants -> sweep -> outputs."""
from nlhelm.orchestrator.graph import build_pipeline_graph, run, save_audit_log
from nlhelm.orchestrator.state import (
    EXIT_CONFIG,
    EXIT_NO_CONVERGENCE,
    EXIT_OK,
    EXIT_POSITIVITY,
    MODE_CONSTANTS,
    MODE_SOLVE,
    RunState,
)

__all__ = [
    "EXIT_CONFIG",
    "EXIT_NO_CONVERGENCE",
    "EXIT_OK",
    "EXIT_POSITIVITY",
    "MODE_CONSTANTS",
    "MODE_SOLVE",
    "RunState",
    "build_pipeline_graph",
    "run",
    "save_audit_log",
]

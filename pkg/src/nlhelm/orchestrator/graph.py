"""Build and run the solver pipeline StateGraph.

realize -> geometry -> operators -> positivity -> constants -> sweep -> reconstruct -> emit,
with every stage able to short-circuit to emit.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path

from langgraph.graph import END, START, StateGraph

from nlhelm.config import RunConfig, default_output_dir
from nlhelm.orchestrator.nodes import (
    constants_node,
    emit_node,
    geometry_node,
    operators_node,
    positivity_node,
    realize_node,
    reconstruct_node,
    sweep_node,
)
from nlhelm.orchestrator.state import MODE_CONSTANTS, MODE_SOLVE, RunState
from nlhelm.outputs import RunSummary

logger = logging.getLogger(__name__)

AUDIT_FILE = "audit.json"


# ---------------------------------------------------------------------------
# Conditional-edge routers
# ---------------------------------------------------------------------------
def _continue_to(next_node: str):
    def router(state: RunState) -> str:
        return "emit" if state.get("failure_code") else next_node

    router.__name__ = f"_after_to_{next_node}"
    return router


def _after_constants(state: RunState) -> str:
    """Stop after the constants in ``constants`` mode."""
    if state.get("failure_code") or state.get("mode") == MODE_CONSTANTS:
        return "emit"
    return "sweep"


# ---------------------------------------------------------------------------
# Graph builder
# ---------------------------------------------------------------------------
def build_pipeline_graph():
    """Construct and compile the pipeline graph (no checkpointer: runs are one-shot)."""
    graph = StateGraph(RunState)

    graph.add_node("realize", realize_node)
    graph.add_node("geometry", geometry_node)
    graph.add_node("operators", operators_node)
    graph.add_node("positivity", positivity_node)
    graph.add_node("constants", constants_node)
    graph.add_node("sweep", sweep_node)
    graph.add_node("reconstruct", reconstruct_node)
    graph.add_node("emit", emit_node)

    graph.add_edge(START, "realize")
    for stage, following in (("realize", "geometry"), ("geometry", "operators"),
                             ("operators", "positivity"), ("positivity", "constants")):
        graph.add_conditional_edges(stage, _continue_to(following), {following: following, "emit": "emit"})

    graph.add_conditional_edges("constants", _after_constants, {"sweep": "sweep", "emit": "emit"})
    graph.add_edge("sweep", "reconstruct")
    graph.add_edge("reconstruct", "emit")
    graph.add_edge("emit", END)

    return graph.compile()


def save_audit_log(state: RunState, output_path: str | Path) -> Path:
    """Dump the accumulated audit log to a JSON file."""
    audit = state.get("audit_log", [])
    path = Path(output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(audit, indent=2, default=str), encoding="utf-8")
    return path


def run(config: RunConfig, mode: str = MODE_SOLVE, workers: int = 1) -> RunSummary:
    """Execute the pipeline for ``config`` and write outputs plus ``audit.json``."""
    if mode not in (MODE_SOLVE, MODE_CONSTANTS):
        raise ValueError(f"unknown run mode {mode!r}")
    output_dir = Path(config.output_dir) if config.output_dir else default_output_dir()
    initial_state: RunState = {
        "config": config,
        "mode": mode,
        "workers": max(1, int(workers)),
        "output_dir": str(output_dir),
        "audit_log": [],
        "errors": [],
    }
    compiled = build_pipeline_graph()
    final_state: RunState = initial_state
    for event in compiled.stream(initial_state, stream_mode="values"):
        final_state = event
        phase = event.get("current_phase", "")
        if phase:
            logger.info("[%s]", phase)

    audit_path = save_audit_log(final_state, output_dir / AUDIT_FILE)
    logger.info("audit log saved to %s", audit_path)
    return final_state["summary"]

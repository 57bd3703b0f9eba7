"""LangGraph workflow over the training phases encoder -> kernel -> recon"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, TypedDict

from langgraph.graph import END, StateGraph

from ..errors import UsageError
from ..models.config_models import RunConfig
from ..networks.bundle import CHECKPOINT_NAMES, PHASES, ModelBundle, save_checkpoint
from ..pipeline.common import PhaseResult, StepHook, TrainingSet, TrainLog, configure_torch
from ..pipeline.encoder_trainer import pretrain_encoder
from ..pipeline.kernel_trainer import train_kernel_predictor
from ..pipeline.recon_trainer import train_reconstructor

logger = logging.getLogger(__name__)

TRAIN_LOG_NAME = "train_log.jsonl"
PHASE_NODES = {"encoder": "pretrain_encoder", "kernel": "train_kernel", "recon": "train_recon"}
PREREQUISITE_FLAGS = {"encoder": "--encoder", "kernel": "--kernel"}


class TrainingState(TypedDict, total=False):
    """State definition for the training workflow"""

    # Input parameters
    manifest_path: str
    config: RunConfig
    out_dir: str
    phases: List[str]
    prerequisites: Dict[str, str]
    on_step: Optional[StepHook]

    # Intermediate data
    data: TrainingSet
    bundle: ModelBundle
    log: TrainLog

    # Output
    results: Dict[str, PhaseResult]
    checkpoints: Dict[str, str]

    # Error tracking
    error: Optional[str]
    exception: Optional[BaseException]


def _failed(what: str, e: Exception) -> dict:
    return {"error": f"{what}: {e}", "exception": e}


def load_inputs(state: TrainingState) -> dict:
    """Load the training set, build networks and load checkpoints of phases not being trained"""
    try:
        config = state["config"]
        phases = state["phases"]
        prerequisites = state.get("prerequisites") or {}
        needed = PHASES[: PHASES.index(phases[0])]
        absent = [p for p in needed if not prerequisites.get(p)]
        if absent:
            names = ", ".join(f"{p} checkpoint ({CHECKPOINT_NAMES[p]}, {PREREQUISITE_FLAGS[p]})" for p in absent)
            raise UsageError(f"phase {phases[0]} is missing the {names}")
        for phase in needed:
            if not Path(prerequisites[phase]).exists():
                raise UsageError(f"{phase} checkpoint not found: {prerequisites[phase]}")

        configure_torch(config)
        data = TrainingSet.from_manifest(state["manifest_path"], config)
        bundle = ModelBundle.create(config, seed=config.train.seed)
        for phase in needed:
            bundle.load_phase(phase, prerequisites[phase])
        bundle.to(config.train.device)

        log = TrainLog(Path(state["out_dir"]) / TRAIN_LOG_NAME, replace_phases=phases)
        return {"data": data, "bundle": bundle, "log": log, "results": {}, "checkpoints": {}}
    except Exception as e:
        return _failed("Failed to load training inputs", e)


def _run(state: TrainingState, phase: str, trainer) -> dict:
    bundle = state["bundle"]
    out_dir = Path(state["out_dir"])
    path = out_dir / CHECKPOINT_NAMES[phase]

    def checkpoint(step: int) -> None:
        save_checkpoint(bundle.module(phase), path, phase, bundle.config, bundle.schedule)
        logger.debug(f"[{phase}] checkpoint at step {step}")

    result = trainer(state["data"], bundle, log=state["log"], on_step=state.get("on_step"), checkpoint_fn=checkpoint)
    checkpoint(result.steps)
    logger.info(f"Saved {path}")
    return {
        "results": {**state.get("results", {}), phase: result},
        "checkpoints": {**state.get("checkpoints", {}), phase: str(path)},
    }


def pretrain_encoder_node(state: TrainingState) -> dict:
    """Pretrain the LR encoder"""
    try:
        return _run(state, "encoder", pretrain_encoder)
    except Exception as e:
        return _failed("Encoder pretraining failed", e)


def train_kernel_node(state: TrainingState) -> dict:
    """Train the kernel noise predictor"""
    try:
        return _run(state, "kernel", train_kernel_predictor)
    except Exception as e:
        return _failed("Kernel predictor training failed", e)


def train_recon_node(state: TrainingState) -> dict:
    """Train the image noise predictor"""
    try:
        return _run(state, "recon", train_reconstructor)
    except Exception as e:
        return _failed("Reconstructor training failed", e)


def error_sink(state: TrainingState) -> dict:
    """Terminal node for error states"""
    return {}


def success_sink(state: TrainingState) -> dict:
    """Terminal node for success states"""
    return {}


# Routing functions
def _next_node(state: TrainingState, done: Optional[str]) -> str:
    if state.get("error"):
        return "error_sink"
    start = 0 if done is None else PHASES.index(done) + 1
    for phase in PHASES[start:]:
        if phase in state["phases"]:
            return PHASE_NODES[phase]
    return "success_sink"


def route_after_load(state: TrainingState) -> str:
    return _next_node(state, None)


def route_after_encoder(state: TrainingState) -> str:
    return _next_node(state, "encoder")


def route_after_kernel(state: TrainingState) -> str:
    return _next_node(state, "kernel")


def route_after_recon(state: TrainingState) -> str:
    return _next_node(state, "recon")


def build_training_graph() -> StateGraph:
    """Build the training workflow graph"""
    graph = StateGraph(TrainingState)

    graph.add_node("load_inputs", load_inputs)
    graph.add_node("pretrain_encoder", pretrain_encoder_node)
    graph.add_node("train_kernel", train_kernel_node)
    graph.add_node("train_recon", train_recon_node)
    graph.add_node("error_sink", error_sink)
    graph.add_node("success_sink", success_sink)

    graph.set_entry_point("load_inputs")

    graph.add_conditional_edges("load_inputs", route_after_load)
    graph.add_conditional_edges("pretrain_encoder", route_after_encoder)
    graph.add_conditional_edges("train_kernel", route_after_kernel)
    graph.add_conditional_edges("train_recon", route_after_recon)

    graph.add_edge("error_sink", END)
    graph.add_edge("success_sink", END)

    return graph


def normalize_phases(phases) -> List[str]:
    """'all' or any subset of PHASES, returned in training order; the subset must be contiguous."""
    if isinstance(phases, str):
        phases = list(PHASES) if phases == "all" else [phases]
    unknown = [p for p in phases if p not in PHASES]
    if unknown or not phases:
        raise UsageError(f"unknown phase(s) {unknown or phases}, expected 'all' or any of {', '.join(PHASES)}")
    ordered = [p for p in PHASES if p in phases]
    first = PHASES.index(ordered[0])
    if ordered != list(PHASES[first:first + len(ordered)]):
        raise UsageError(f"phases must be contiguous in {' -> '.join(PHASES)}, got {ordered}")
    return ordered


def run_training(
    manifest_path: str,
    config: RunConfig,
    out_dir: str,
    phases="all",
    prerequisites: Optional[Dict[str, str]] = None,
    on_step: Optional[StepHook] = None,
) -> TrainingState:
    """
    Run the requested training phases using LangGraph.

    Args:
        manifest_path: Path to the dataset manifest.json
        config: Validated run configuration
        out_dir: Directory receiving <phase>.ckpt files and train_log.jsonl
        phases: "all", one phase name, or a contiguous list of phases
        prerequisites: Checkpoint paths of earlier phases that are not trained in this run
        on_step: Optional hook called after every gradient step

    Returns:
        Final graph state (bundle, results, checkpoints)

    Raises:
        The exception that stopped the failing node, so callers can map it to an exit code
    """
    app = build_training_graph().compile()
    initial_state = {
        "manifest_path": str(manifest_path),
        "config": config,
        "out_dir": str(out_dir),
        "phases": normalize_phases(phases),
        "prerequisites": dict(prerequisites or {}),
        "on_step": on_step,
    }

    final_state = app.invoke(initial_state)

    if final_state.get("error"):
        exc = final_state.get("exception")
        if exc is not None:
            raise exc
        raise RuntimeError(final_state["error"])
    return final_state

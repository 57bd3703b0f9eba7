"""Graph package for Dual Diffusion SR"""

from .training_graph import build_training_graph, normalize_phases, run_training

__all__ = ["build_training_graph", "normalize_phases", "run_training"]

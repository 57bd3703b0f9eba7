"""Encoder pretraining, the two diffusion training phases, inference and evaluation"""

from .common import PhaseResult, PlateauDetector, StepInfo, TrainingSet, TrainLog
from .encoder_trainer import pretrain_encoder
from .evaluation import evaluate, evaluate_tensors, score_sample
from .inference import KernelPrediction, SRResult, predict_kernel, super_resolve
from .kernel_trainer import train_kernel_predictor
from .recon_trainer import KernelConditionCache, residual_target, train_reconstructor

__all__ = [
    "KernelConditionCache",
    "KernelPrediction",
    "PhaseResult",
    "PlateauDetector",
    "SRResult",
    "StepInfo",
    "TrainLog",
    "TrainingSet",
    "evaluate",
    "evaluate_tensors",
    "predict_kernel",
    "pretrain_encoder",
    "residual_target",
    "score_sample",
    "super_resolve",
    "train_kernel_predictor",
    "train_reconstructor",
]

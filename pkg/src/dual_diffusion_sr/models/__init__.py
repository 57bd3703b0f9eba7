"""Models package for Dual Diffusion SR"""

from .config_models import (
    ArchitectureConfig,
    DatasetConfig,
    OptimizerConfig,
    RunConfig,
    ScheduleConfig,
    TrainConfig,
)
from .dataset_models import DatasetManifest, ManifestEntry
from .kernel_models import Kernel, KernelParams
from .report_models import EvalReport, EvalRow

__all__ = [
    "ArchitectureConfig",
    "DatasetConfig",
    "DatasetManifest",
    "EvalReport",
    "EvalRow",
    "Kernel",
    "KernelParams",
    "ManifestEntry",
    "OptimizerConfig",
    "RunConfig",
    "ScheduleConfig",
    "TrainConfig",
]

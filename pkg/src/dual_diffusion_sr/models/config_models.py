"""Run configuration models, loaded from a single YAML file"""

import hashlib
import json
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class DatasetConfig(BaseModel):
    """Degradation settings shared by data generation, training and inference."""

    model_config = ConfigDict(extra="forbid")

    scale: int = Field(4, ge=1, description="Downsampling factor s")
    patch_size: int = Field(64, ge=8, description="HR patch side length")
    kernel_size: int = Field(24, ge=3, description="Blur kernel side length")
    kernel_scale: float = Field(
        10.0, gt=0.0, description="Factor mapping unit-sum kernels into the kernel chain's sample space"
    )


class ScheduleConfig(BaseModel):
    """Noise schedule spec; the arrays are always recomputed from these four values."""

    model_config = ConfigDict(extra="forbid")

    T: int = Field(100, ge=1, description="Number of diffusion steps")
    beta_start: float = Field(1e-4, gt=0.0, lt=1.0)
    beta_end: float = Field(0.05, gt=0.0, lt=1.0)
    shape: Literal["linear"] = "linear"

    @model_validator(mode="after")
    def check_range(self) -> "ScheduleConfig":
        if self.beta_start > self.beta_end:
            raise ValueError("beta_start must not exceed beta_end")
        return self


class ArchitectureConfig(BaseModel):
    """Widths and depths of the three networks."""

    model_config = ConfigDict(extra="forbid")

    color_channels: int = Field(3, description="Channels of LR/HR images")
    encoder_channels: int = Field(32, ge=1, description="RRDB trunk width")
    encoder_blocks: int = Field(8, ge=1, description="Number of RRDBs")
    encoder_growth: int = Field(16, ge=1, description="Dense-block growth channels")
    kernel_channels: int = Field(64, ge=1, description="Kernel noise predictor width")
    kernel_levels: int = Field(2, ge=1, description="Down/up groups in the kernel predictor")
    image_channels: int = Field(64, ge=1, description="Image noise predictor width")
    image_levels: int = Field(4, ge=1, description="Down/up groups in the image predictor")
    dynamic_kernels: int = Field(4, ge=1, description="Candidate kernels K per dynamic convolution")
    temperature: float = Field(1.0, gt=0.0, description="Attention softmax temperature")
    v_proj_dim: int = Field(64, ge=1, description="Projection width of the kernel condition v per block")
    attention_hidden: int = Field(32, ge=1, description="Hidden width of the attention MLP")
    zero_init_output: bool = Field(True, description="Zero-initialise each predictor's output conv")


class OptimizerConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lr: float = Field(1e-4, gt=0.0)
    weight_decay: float = Field(0.0, ge=0.0)
    grad_clip: float = Field(1.0, gt=0.0)


class TrainConfig(BaseModel):
    """Loop settings for the three training phases."""

    model_config = ConfigDict(extra="forbid")

    batch_size: int = Field(4, ge=1)
    encoder_steps: int = Field(2000, ge=1)
    kernel_steps: int = Field(20000, ge=1)
    recon_steps: int = Field(20000, ge=1)
    seed: int = 0
    log_interval: int = Field(50, ge=1)
    checkpoint_interval: int = Field(0, ge=0, description="Steps between intermediate checkpoints, 0 disables")
    plateau_window: int = Field(0, ge=0, description="Window of the plateau stop rule, 0 disables")
    plateau_tol: float = Field(1e-3, gt=0.0)
    recompute_v_every_step: bool = Field(False, description="Resample v each step instead of caching it")
    device: str = "cpu"
    num_threads: int = Field(1, ge=0, description="torch intra-op threads, 0 keeps the torch default")


class RunConfig(BaseModel):
    """Complete configuration file: dataset, schedule, architecture, optimizer, seeds."""

    model_config = ConfigDict(extra="forbid")

    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    architecture: ArchitectureConfig = Field(default_factory=ArchitectureConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)

    def config_hash(self) -> str:
        """SHA-256 over the canonical JSON dump."""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

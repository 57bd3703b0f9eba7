"""
Network construction from config, and per-phase checkpoints.

Each trained phase is saved as its own tensor container (encoder.ckpt,
kernel.ckpt, recon.ckpt). The header carries the full run config and the
schedule spec with its checksum, so shapes can be rebuilt from the config
alone and validated before any weight is loaded.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Set

import torch
import torch.nn as nn
from pydantic import ValidationError

from ..diffusion.schedule import DiffusionSchedule
from ..errors import DataError, UsageError
from ..models.config_models import RunConfig
from ..utils.file_ops import PathLike
from ..utils.tensor_container import read_container, write_container
from .image_unet import ImageNoisePredictor
from .kernel_unet import KernelNoisePredictor
from .rrdb import RRDBEncoder, SRHead

logger = logging.getLogger(__name__)

BUNDLE_VERSION = 1
PHASES = ("encoder", "kernel", "recon")
CHECKPOINT_NAMES = {"encoder": "encoder.ckpt", "kernel": "kernel.ckpt", "recon": "recon.ckpt"}


def count_parameters(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())


def build_encoder(config: RunConfig) -> RRDBEncoder:
    a = config.architecture
    return RRDBEncoder(a.color_channels, a.encoder_channels, a.encoder_blocks, a.encoder_growth)


def build_sr_head(config: RunConfig) -> SRHead:
    a = config.architecture
    return SRHead(a.encoder_channels, a.color_channels, config.dataset.scale)


def build_kernel_predictor(config: RunConfig) -> KernelNoisePredictor:
    a = config.architecture
    return KernelNoisePredictor(
        kernel_size=config.dataset.kernel_size,
        encoder_channels=a.encoder_channels,
        channels=a.kernel_channels,
        levels=a.kernel_levels,
        zero_init_output=a.zero_init_output,
    )


def build_image_predictor(config: RunConfig) -> ImageNoisePredictor:
    a = config.architecture
    return ImageNoisePredictor(
        color_channels=a.color_channels,
        encoder_channels=a.encoder_channels,
        channels=a.image_channels,
        levels=a.image_levels,
        kernel_dim=config.dataset.kernel_size ** 2,
        v_proj_dim=a.v_proj_dim,
        num_kernels=a.dynamic_kernels,
        temperature=a.temperature,
        attention_hidden=a.attention_hidden,
        zero_init_output=a.zero_init_output,
    )


def state_checksum(module: nn.Module) -> str:
    """Order-stable digest of every parameter, for phase-isolation checks."""
    h = hashlib.sha256()
    for name, tensor in sorted(module.state_dict().items()):
        h.update(name.encode())
        h.update(tensor.detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()


def checkpoint_meta(phase: str, config: RunConfig, schedule: DiffusionSchedule) -> dict:
    return {
        "version": BUNDLE_VERSION,
        "phase": phase,
        "config": config.model_dump(mode="json"),
        "config_hash": config.config_hash(),
        "schedule": schedule.spec(),
        "schedule_checksum": schedule.checksum(),
    }


def save_checkpoint(
    module: nn.Module, path: PathLike, phase: str, config: RunConfig, schedule: DiffusionSchedule
) -> Path:
    state = {name: t.detach().cpu() for name, t in module.state_dict().items()}
    return write_container(path, state, meta=checkpoint_meta(phase, config, schedule))


def read_checkpoint_config(path: PathLike) -> RunConfig:
    _, meta = read_container(path)
    try:
        return RunConfig(**meta["config"])
    except (KeyError, TypeError, ValidationError) as e:
        raise DataError(f"checkpoint {path} carries no valid config: {e}") from e


def load_checkpoint(module: nn.Module, path: PathLike, phase: str) -> dict:
    """Validate phase and every tensor shape against `module`, then load in place."""
    tensors, meta = read_container(path)
    if meta.get("version") != BUNDLE_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {meta.get('version')!r}")
    if meta.get("phase") != phase:
        raise DataError(f"{path} holds a {meta.get('phase')!r} checkpoint, expected {phase!r}")
    DiffusionSchedule.from_spec(meta.get("schedule", {})).verify(meta.get("schedule_checksum", ""))

    expected = module.state_dict()
    missing = sorted(set(expected) - set(tensors))
    unexpected = sorted(set(tensors) - set(expected))
    if missing or unexpected:
        raise DataError(f"{path}: tensors do not match the {phase} network (missing {missing[:3]}, unexpected {unexpected[:3]})")
    for name, ref in expected.items():
        if tuple(tensors[name].shape) != tuple(ref.shape):
            raise DataError(
                f"{path}: tensor {name!r} has shape {tuple(tensors[name].shape)}, config implies {tuple(ref.shape)}"
            )
    module.load_state_dict({name: torch.from_numpy(arr) for name, arr in tensors.items()})
    logger.debug(f"Loaded {phase} checkpoint {path}")
    return meta


@dataclass
class ModelBundle:
    """The three networks plus the config and schedule they were built for."""

    config: RunConfig
    schedule: DiffusionSchedule
    encoder: RRDBEncoder
    kernel_predictor: KernelNoisePredictor
    image_predictor: ImageNoisePredictor
    trained: Set[str] = field(default_factory=set)

    @classmethod
    def create(cls, config: RunConfig, seed: Optional[int] = None) -> "ModelBundle":
        """Fresh networks; a seed makes the initial weights reproducible."""
        if seed is not None:
            torch.manual_seed(seed)
        return cls(
            config=config,
            schedule=DiffusionSchedule.from_config(config.schedule),
            encoder=build_encoder(config),
            kernel_predictor=build_kernel_predictor(config),
            image_predictor=build_image_predictor(config),
        )

    def module(self, phase: str) -> nn.Module:
        modules = {"encoder": self.encoder, "kernel": self.kernel_predictor, "recon": self.image_predictor}
        if phase not in modules:
            raise UsageError(f"unknown phase {phase!r}, expected one of {', '.join(PHASES)}")
        return modules[phase]

    def require(self, *phases: str) -> None:
        for phase in phases:
            if phase not in self.trained:
                raise UsageError(f"bundle has no trained {phase} network ({CHECKPOINT_NAMES[phase]})")

    def eval(self) -> "ModelBundle":
        for phase in PHASES:
            self.module(phase).eval()
        return self

    def to(self, device: str) -> "ModelBundle":
        for phase in PHASES:
            self.module(phase).to(device)
        return self

    def save(self, out_dir: PathLike, phases: Optional[Iterable[str]] = None) -> Dict[str, Path]:
        out_dir = Path(out_dir)
        written = {}
        for phase in phases or sorted(self.trained, key=PHASES.index):
            written[phase] = save_checkpoint(
                self.module(phase), out_dir / CHECKPOINT_NAMES[phase], phase, self.config, self.schedule
            )
        return written

    def load_phase(self, phase: str, path: PathLike) -> None:
        load_checkpoint(self.module(phase), path, phase)
        self.trained.add(phase)

    @classmethod
    def load(
        cls,
        directory: PathLike,
        phases: Iterable[str] = PHASES,
        config: Optional[RunConfig] = None,
    ) -> "ModelBundle":
        """Load the named phases from a checkpoint directory; the config defaults to the latest phase's."""
        directory = Path(directory)
        phases = [p for p in PHASES if p in set(phases)]
        paths = {p: directory / CHECKPOINT_NAMES[p] for p in phases}
        for phase, path in paths.items():
            if not path.exists():
                raise UsageError(f"missing {phase} checkpoint: {path}")
        if config is None:
            if not paths:
                raise UsageError("no phases requested")
            config = read_checkpoint_config(paths[phases[-1]])
        bundle = cls.create(config)
        for phase, path in paths.items():
            bundle.load_phase(phase, path)
        return bundle

"""Training data, loop plumbing and logs shared by the three trainers"""

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import torch

from ..degradation.dataset import load_triplet
from ..errors import DataError, NumericalFailure
from ..models.config_models import RunConfig
from ..models.kernel_models import Kernel
from ..utils.config_loader import read_manifest
from ..utils.file_ops import PathLike, atomic_write_text
from ..utils.image_io import to_signed
from ..utils.logging_setup import metric

logger = logging.getLogger(__name__)

PHASE_SEED_OFFSET = {"encoder": 0, "kernel": 1, "recon": 2}


@dataclass
class TrainingSet:
    """Signed-range HR/LR batches and kernels scaled into the kernel chain's space."""

    hr: torch.Tensor
    lr: torch.Tensor
    kernels: torch.Tensor
    names: List[str]

    def __len__(self) -> int:
        return self.hr.shape[0]

    @classmethod
    def from_tensors(
        cls,
        hr: Sequence[torch.Tensor],
        lr: Sequence[torch.Tensor],
        kernels: Sequence[Kernel],
        kernel_scale: float = 10.0,
        names: Optional[List[str]] = None,
    ) -> "TrainingSet":
        """hr/lr are unit-range (C, H, W) images."""
        if len(hr) == 0:
            raise DataError("training set is empty")
        if not len(hr) == len(lr) == len(kernels):
            raise DataError(f"mismatched counts: {len(hr)} HR, {len(lr)} LR, {len(kernels)} kernels")
        ker = np.stack([k.values for k in kernels]).astype(np.float32) * np.float32(kernel_scale)
        return cls(
            hr=to_signed(torch.stack(list(hr))),
            lr=to_signed(torch.stack(list(lr))),
            kernels=torch.from_numpy(ker).unsqueeze(1),
            names=names or [f"{i:06d}" for i in range(len(hr))],
        )

    @classmethod
    def from_manifest(cls, manifest_path: PathLike, config: RunConfig) -> "TrainingSet":
        manifest = read_manifest(str(manifest_path))
        if not manifest.entries:
            raise DataError(f"manifest {manifest_path} has no entries")
        if manifest.s != config.dataset.scale:
            raise DataError(f"manifest scale {manifest.s} differs from config scale {config.dataset.scale}")
        if manifest.kernel_size != config.dataset.kernel_size:
            raise DataError(
                f"manifest kernel size {manifest.kernel_size} differs from config {config.dataset.kernel_size}"
            )
        root = Path(manifest_path).parent
        hr, lr, kernels = [], [], []
        for entry in manifest.entries:
            hr_img, lr_img, kernel = load_triplet(root, entry)
            hr.append(hr_img)
            lr.append(lr_img)
            kernels.append(kernel)
        logger.info(f"Loaded {len(hr)} training triplets from {manifest_path}")
        return cls.from_tensors(hr, lr, kernels, config.dataset.kernel_scale, [e.stem for e in manifest.entries])

    def sample_indices(self, batch_size: int, generator: torch.Generator) -> torch.Tensor:
        return torch.randint(0, len(self), (batch_size,), generator=generator)


@dataclass
class StepInfo:
    """What a trainer reports to on_step hooks after each gradient step."""

    phase: str
    step: int
    loss: float
    eps: Optional[torch.Tensor] = None
    eps_hat: Optional[torch.Tensor] = None


StepHook = Callable[[StepInfo], None]


@dataclass
class PhaseResult:
    phase: str
    losses: List[float] = field(default_factory=list)
    stopped_early: bool = False
    cache_hits: int = 0
    cache_misses: int = 0

    @property
    def steps(self) -> int:
        return len(self.losses)


class TrainLog:
    """
    Appends {step, phase, loss, wall_time} JSON lines to train_log.jsonl.

    wall_time is seconds since the log was opened. Existing lines of the
    phases in `replace_phases` are dropped on open, so rerunning a phase
    into the same directory does not duplicate its records. Without a path
    the records are only kept in memory.
    """

    def __init__(self, path: Optional[PathLike] = None, replace_phases: Iterable[str] = ()):
        self.path = Path(path) if path else None
        self.records: List[dict] = []
        self._start = time.perf_counter()
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._drop(set(replace_phases))

    def _drop(self, phases: set) -> None:
        if not self.path.exists():
            return
        kept = []
        for line in self.path.read_text(encoding="utf-8").splitlines():
            try:
                if json.loads(line).get("phase") in phases:
                    continue
            except json.JSONDecodeError:
                continue
            kept.append(line + "\n")
        atomic_write_text(self.path, "".join(kept))

    def record(self, phase: str, step: int, loss: float) -> dict:
        rec = {"step": step, "phase": phase, "loss": loss, "wall_time": round(time.perf_counter() - self._start, 4)}
        self.records.append(rec)
        if self.path:
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(json.dumps(rec) + "\n")
        return rec


class PlateauDetector:
    """
    Stops when the mean loss of the latest window improves on the window
    before it by less than `tol` (relative).
    """

    def __init__(self, window: int, tol: float = 1e-3):
        if window < 1:
            raise DataError(f"plateau window must be >= 1, got {window}")
        self.window = window
        self.tol = tol
        self.history: List[float] = []

    def update(self, loss: float) -> bool:
        self.history.append(loss)
        if len(self.history) < 2 * self.window:
            return False
        recent = float(np.mean(self.history[-self.window:]))
        previous = float(np.mean(self.history[-2 * self.window:-self.window]))
        if previous == 0.0:
            return True
        return (previous - recent) / abs(previous) < self.tol


def phase_generator(config: RunConfig, phase: str) -> torch.Generator:
    return torch.Generator().manual_seed(config.train.seed + PHASE_SEED_OFFSET[phase])


def configure_torch(config: RunConfig) -> None:
    if config.train.num_threads > 0:
        torch.set_num_threads(config.train.num_threads)


def freeze(module: torch.nn.Module) -> torch.nn.Module:
    module.eval()
    for p in module.parameters():
        p.requires_grad_(False)
    return module


LossFn = Callable[[int], Tuple[torch.Tensor, Optional[Tuple[torch.Tensor, torch.Tensor]]]]


def run_phase(
    phase: str,
    steps: int,
    params: Iterable[torch.nn.Parameter],
    loss_fn: LossFn,
    config: RunConfig,
    log: Optional[TrainLog] = None,
    on_step: Optional[StepHook] = None,
    checkpoint_fn: Optional[Callable[[int], None]] = None,
) -> PhaseResult:
    """
    Adam with gradient-norm clipping over `steps` calls of loss_fn(step).

    loss_fn returns the loss and, for the diffusion phases, the (eps, eps_hat)
    pair it was computed from. A non-finite loss raises NumericalFailure.
    checkpoint_fn(step) runs every checkpoint_interval steps when set.
    """
    params = [p for p in params if p.requires_grad]
    opt_cfg, train_cfg = config.optimizer, config.train
    optimizer = torch.optim.Adam(params, lr=opt_cfg.lr, weight_decay=opt_cfg.weight_decay)
    plateau = PlateauDetector(train_cfg.plateau_window, train_cfg.plateau_tol) if train_cfg.plateau_window else None
    result = PhaseResult(phase)

    for step in range(1, steps + 1):
        loss, pair = loss_fn(step)
        if not torch.isfinite(loss):
            raise NumericalFailure(f"{phase}: non-finite loss {float(loss)} at step {step}")
        optimizer.zero_grad(set_to_none=True)
        loss.backward()
        torch.nn.utils.clip_grad_norm_(params, opt_cfg.grad_clip)
        optimizer.step()

        value = float(loss.detach())
        result.losses.append(value)
        if on_step is not None:
            eps, eps_hat = pair if pair is not None else (None, None)
            on_step(StepInfo(phase, step, value, eps, None if eps_hat is None else eps_hat.detach()))
        if step % train_cfg.log_interval == 0:
            metric(phase, step, loss=value)
            if log is not None:
                log.record(phase, step, value)
        if checkpoint_fn is not None and train_cfg.checkpoint_interval and step % train_cfg.checkpoint_interval == 0:
            checkpoint_fn(step)
        if plateau is not None and plateau.update(value):
            logger.info(f"[{phase}] loss plateaued at step {step}, stopping")
            result.stopped_early = True
            break
    return result


@torch.no_grad()
def encode_lr(encoder: torch.nn.Module, lr: torch.Tensor, chunk: int = 16) -> torch.Tensor:
    """u for every LR image, computed in chunks with the encoder frozen."""
    device = next(encoder.parameters()).device
    return torch.cat([encoder(lr[i:i + chunk].to(device)) for i in range(0, lr.shape[0], chunk)])

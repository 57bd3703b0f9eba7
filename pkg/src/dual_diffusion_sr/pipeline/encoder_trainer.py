"""Encoder pretraining: RRDB encoder + temporary pixel-shuffle head, L1 against HR"""

import logging
from typing import Callable, Optional

import torch
import torch.nn.functional as F

from ..degradation.ops import bicubic_resize
from ..networks.bundle import ModelBundle, build_sr_head
from ..utils.logging_setup import step
from .common import PhaseResult, StepHook, TrainingSet, TrainLog, freeze, phase_generator, run_phase

logger = logging.getLogger(__name__)


def pretrain_encoder(
    data: TrainingSet,
    bundle: ModelBundle,
    log: Optional[TrainLog] = None,
    on_step: Optional[StepHook] = None,
    steps: Optional[int] = None,
    checkpoint_fn: Optional[Callable[[int], None]] = None,
) -> PhaseResult:
    """
    Trains bundle.encoder in place, then freezes it. The SR head predicts the
    residual over the bicubic upsample and is discarded afterwards.
    """
    config = bundle.config
    steps = steps or config.train.encoder_steps
    step(1, f"Encoder pretraining ({steps} steps, {len(data)} samples)")

    device = config.train.device
    torch.manual_seed(config.train.seed)
    head = build_sr_head(config).to(device)
    encoder = bundle.encoder.to(device).train()
    for p in encoder.parameters():
        p.requires_grad_(True)

    hr = data.hr.to(device)
    lr = data.lr.to(device)
    up = bicubic_resize(lr, config.dataset.scale, value_range="signed")
    generator = phase_generator(config, "encoder")

    def loss_fn(_: int):
        idx = data.sample_indices(config.train.batch_size, generator).to(device)
        pred = up[idx] + head(encoder(lr[idx]))
        return F.l1_loss(pred, hr[idx]), None

    params = list(encoder.parameters()) + list(head.parameters())
    result = run_phase("encoder", steps, params, loss_fn, config, log, on_step, checkpoint_fn)
    freeze(encoder)
    bundle.trained.add("encoder")
    logger.info(f"Encoder L1 {result.losses[0]:.4f} -> {result.losses[-1]:.4f}")
    return result

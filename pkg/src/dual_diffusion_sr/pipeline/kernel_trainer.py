"""Kernel-chain training: epsilon prediction on diffused kernels, conditioned on u"""

import logging
from typing import Callable, Optional

import torch

from ..diffusion.process import noise_loss, q_sample, sample_timesteps
from ..networks.bundle import ModelBundle
from ..utils.logging_setup import step
from .common import PhaseResult, StepHook, TrainingSet, TrainLog, encode_lr, freeze, phase_generator, run_phase

logger = logging.getLogger(__name__)


def train_kernel_predictor(
    data: TrainingSet,
    bundle: ModelBundle,
    log: Optional[TrainLog] = None,
    on_step: Optional[StepHook] = None,
    steps: Optional[int] = None,
    checkpoint_fn: Optional[Callable[[int], None]] = None,
) -> PhaseResult:
    """Each step pairs a kernel with the LR patch it generated; the encoder stays frozen."""
    bundle.require("encoder")
    config = bundle.config
    steps = steps or config.train.kernel_steps
    step(2, f"Kernel predictor ({steps} steps, T={bundle.schedule.T})")

    device = config.train.device
    freeze(bundle.encoder.to(device))
    u_all = encode_lr(bundle.encoder, data.lr)
    kernels = data.kernels.to(device)
    net = bundle.kernel_predictor.to(device).train()
    for p in net.parameters():
        p.requires_grad_(True)
    sched = bundle.schedule
    generator = phase_generator(config, "kernel")

    def loss_fn(_: int):
        idx = data.sample_indices(config.train.batch_size, generator)
        x0 = kernels[idx.to(device)]
        eps = torch.randn(x0.shape, generator=generator).to(device)
        t = sample_timesteps(len(idx), sched.T, generator).to(device)
        eps_hat = net(q_sample(x0, t, eps, sched), u_all[idx.to(device)], t)
        return noise_loss(eps_hat, eps), (eps, eps_hat)

    result = run_phase("kernel", steps, net.parameters(), loss_fn, config, log, on_step, checkpoint_fn)
    freeze(net)
    bundle.trained.add("kernel")
    logger.info(f"Kernel loss {result.losses[0]:.4f} -> {result.losses[-1]:.4f}")
    return result

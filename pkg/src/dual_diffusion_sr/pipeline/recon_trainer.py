"""Image-chain training on the residual x_HR - up(x_LR), conditioned on (u, v)"""

import logging
from typing import Callable, Dict, Optional

import torch

from ..degradation.ops import bicubic_resize
from ..diffusion.process import noise_loss, q_sample, sample_timesteps
from ..networks.bundle import ModelBundle
from ..utils.logging_setup import step
from .common import PhaseResult, StepHook, TrainingSet, TrainLog, encode_lr, freeze, phase_generator, run_phase
from .inference import sample_kernel_chain, sample_seed

logger = logging.getLogger(__name__)


class KernelConditionCache:
    """
    v per training sample. Each sample's kernel chain runs once with its own
    seed derived from (seed, index), so the cached value does not depend on
    which batch first asked for it.
    """

    def __init__(self, bundle: ModelBundle, u_all: torch.Tensor, seed: int):
        self.bundle = bundle
        self.u_all = u_all
        self.seed = seed
        self._cache: Dict[int, torch.Tensor] = {}
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._cache)

    def get(self, indices: torch.Tensor) -> torch.Tensor:
        rows = []
        for i in indices.tolist():
            if i in self._cache:
                self.hits += 1
            else:
                self.misses += 1
                generator = torch.Generator().manual_seed(sample_seed(self.seed, i))
                x0 = sample_kernel_chain(self.bundle, self.u_all[i:i + 1], generator)
                self._cache[i] = x0.reshape(-1)
            rows.append(self._cache[i])
        return torch.stack(rows)


def residual_target(hr: torch.Tensor, lr: torch.Tensor, s: int) -> torch.Tensor:
    """x_img = x_HR - up(x_LR), both signed range, so values lie in [-2, 2]."""
    return hr - bicubic_resize(lr, s, value_range="signed")


def train_reconstructor(
    data: TrainingSet,
    bundle: ModelBundle,
    log: Optional[TrainLog] = None,
    on_step: Optional[StepHook] = None,
    steps: Optional[int] = None,
    checkpoint_fn: Optional[Callable[[int], None]] = None,
    cache: Optional[KernelConditionCache] = None,
) -> PhaseResult:
    """
    Encoder and kernel predictor stay frozen. v comes from `cache` (a fresh
    one when not given) unless recompute_v_every_step is set.
    """
    bundle.require("encoder", "kernel")
    config = bundle.config
    steps = steps or config.train.recon_steps
    step(3, f"Reconstructor ({steps} steps, T={bundle.schedule.T})")

    device = config.train.device
    freeze(bundle.encoder.to(device))
    freeze(bundle.kernel_predictor.to(device))
    u_all = encode_lr(bundle.encoder, data.lr)
    targets = residual_target(data.hr, data.lr, config.dataset.scale).to(device)
    net = bundle.image_predictor.to(device).train()
    for p in net.parameters():
        p.requires_grad_(True)
    sched = bundle.schedule
    generator = phase_generator(config, "recon")
    if cache is None:
        cache = KernelConditionCache(bundle, u_all, config.train.seed)

    def loss_fn(_: int):
        idx = data.sample_indices(config.train.batch_size, generator)
        if config.train.recompute_v_every_step:
            v = sample_kernel_chain(bundle, u_all[idx.to(device)], generator).reshape(len(idx), -1)
        else:
            v = cache.get(idx)
        x0 = targets[idx.to(device)]
        eps = torch.randn(x0.shape, generator=generator).to(device)
        t = sample_timesteps(len(idx), sched.T, generator).to(device)
        eps_hat = net(q_sample(x0, t, eps, sched), u_all[idx.to(device)], v.to(device), t)
        return noise_loss(eps_hat, eps), (eps, eps_hat)

    result = run_phase("recon", steps, net.parameters(), loss_fn, config, log, on_step, checkpoint_fn)
    freeze(net)
    bundle.trained.add("recon")
    logger.info(
        f"Reconstructor loss {result.losses[0]:.4f} -> {result.losses[-1]:.4f} "
        f"(v cache: {cache.hits} hits, {cache.misses} misses)"
    )
    result.cache_hits, result.cache_misses = cache.hits, cache.misses
    return result

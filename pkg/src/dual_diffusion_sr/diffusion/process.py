"""Forward noising, reverse transitions and the noise-prediction objective"""

from typing import Callable, Optional, Sequence, Union

import torch
import torch.nn.functional as F
from tqdm import tqdm

from ..errors import DataError, ShapeError
from .schedule import DiffusionSchedule

Timestep = Union[int, torch.Tensor]
NoisePredictor = Callable[[torch.Tensor, torch.Tensor], torch.Tensor]


def _check_t(t: Timestep, sched: DiffusionSchedule) -> None:
    if isinstance(t, torch.Tensor):
        if t.numel() == 0 or t.dtype.is_floating_point:
            raise DataError(f"timesteps must be a non-empty integer tensor, got {t.dtype}")
        lo, hi = int(t.min()), int(t.max())
    else:
        lo = hi = int(t)
    if lo < 1 or hi > sched.T:
        raise DataError(f"timestep outside 1..{sched.T}: [{lo}, {hi}]")


def extract(arr, t: Timestep, x: torch.Tensor) -> Union[float, torch.Tensor]:
    """Schedule coefficient at t, broadcastable against x (one row per batch element)."""
    if not isinstance(t, torch.Tensor):
        return float(arr[int(t) - 1])
    coef = torch.as_tensor(arr, dtype=torch.float64, device=x.device)
    out = coef.gather(-1, t.to(x.device).long().reshape(-1) - 1).to(x.dtype)
    return out.reshape(-1, *((1,) * (x.dim() - 1)))


def _same_shape(a: torch.Tensor, b: torch.Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{what}: shapes {tuple(a.shape)} and {tuple(b.shape)} differ")


def q_sample(x0: torch.Tensor, t: Timestep, eps: torch.Tensor, sched: DiffusionSchedule) -> torch.Tensor:
    """Closed-form forward marginal: sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps."""
    _same_shape(x0, eps, "q_sample")
    _check_t(t, sched)
    ab = sched.alpha_bars
    return extract(ab ** 0.5, t, x0) * x0 + extract((1.0 - ab) ** 0.5, t, x0) * eps


def posterior_mean(x_t: torch.Tensor, eps_hat: torch.Tensor, t: Timestep, sched: DiffusionSchedule) -> torch.Tensor:
    """(x_t - beta_t / sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(alpha_t)"""
    _same_shape(x_t, eps_hat, "posterior_mean")
    _check_t(t, sched)
    eps_coef = sched.betas / (1.0 - sched.alpha_bars) ** 0.5
    return extract(1.0 / sched.alphas ** 0.5, t, x_t) * (x_t - extract(eps_coef, t, x_t) * eps_hat)


def predict_x0(x_t: torch.Tensor, eps_hat: torch.Tensor, t: Timestep, sched: DiffusionSchedule) -> torch.Tensor:
    """Clean sample implied by a noise prediction."""
    _same_shape(x_t, eps_hat, "predict_x0")
    _check_t(t, sched)
    ab = sched.alpha_bars
    return (x_t - extract((1.0 - ab) ** 0.5, t, x_t) * eps_hat) / extract(ab ** 0.5, t, x_t)


def reverse_step(
    x_t: torch.Tensor,
    eps_hat: torch.Tensor,
    t: Timestep,
    z: Optional[torch.Tensor],
    sched: DiffusionSchedule,
) -> torch.Tensor:
    """x_{t-1} = posterior_mean + sigma_t z. z must be zero (or None) wherever t == 1."""
    mean = posterior_mean(x_t, eps_hat, t, sched)
    if z is None:
        return mean
    _same_shape(x_t, z, "reverse_step")
    if isinstance(t, torch.Tensor):
        at_end = z.reshape(z.shape[0], -1)[(t.reshape(-1) == 1).to(z.device)]
    else:
        at_end = z if t == 1 else z[:0]
    if bool((at_end != 0).any()):
        raise DataError("the last reverse step (t=1) is deterministic; z must be zero")
    return mean + extract(sched.sigmas, t, x_t) * z


def noise_loss(eps_hat: torch.Tensor, eps: torch.Tensor) -> torch.Tensor:
    """Mean squared error over all elements."""
    _same_shape(eps_hat, eps, "noise_loss")
    return F.mse_loss(eps_hat, eps, reduction="mean")


def sample_timesteps(batch: int, T: int, generator: Optional[torch.Generator] = None) -> torch.Tensor:
    """Uniform integers in 1..T."""
    return torch.randint(1, T + 1, (batch,), generator=generator, dtype=torch.long)


def reverse_chain(
    predict: NoisePredictor,
    shape: Sequence[int],
    sched: DiffusionSchedule,
    generator: Optional[torch.Generator] = None,
    dtype: torch.dtype = torch.float32,
    progress: bool = False,
    desc: str = "sampling",
) -> torch.Tensor:
    """
    Run x_T ~ N(0, I) down to x_0, calling predict(x_t, t_batch) at every step.

    Noise is drawn on the CPU from `generator` so a seed fixes the chain
    regardless of where predict runs.
    """
    x = torch.randn(tuple(shape), generator=generator, dtype=dtype)
    steps = range(sched.T, 0, -1)
    for t in tqdm(steps, desc=desc, total=sched.T, disable=not progress, leave=False):
        t_batch = torch.full((x.shape[0],), t, dtype=torch.long)
        eps_hat = predict(x, t_batch).to(dtype).cpu()
        z = torch.randn(x.shape, generator=generator, dtype=dtype) if t > 1 else None
        x = reverse_step(x, eps_hat, t, z, sched)
    return x

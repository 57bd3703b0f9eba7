"""DDPM core shared by the kernel and image chains"""

from .process import (
    extract,
    noise_loss,
    posterior_mean,
    predict_x0,
    q_sample,
    reverse_chain,
    reverse_step,
    sample_timesteps,
)
from .schedule import DiffusionSchedule, make_schedule

__all__ = [
    "DiffusionSchedule",
    "extract",
    "make_schedule",
    "noise_loss",
    "posterior_mean",
    "predict_x0",
    "q_sample",
    "reverse_chain",
    "reverse_step",
    "sample_timesteps",
]

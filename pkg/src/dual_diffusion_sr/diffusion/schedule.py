"""
Noise schedule shared by the kernel and image chains.

Arrays are float64 and indexed by t - 1 for t in 1..T; the convention
alpha_bar_0 = 1 makes sigma_1 exactly zero.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Dict, Literal

import numpy as np

from ..errors import DataError
from ..models.config_models import ScheduleConfig

logger = logging.getLogger(__name__)

ScheduleShape = Literal["linear"]


def _derive(betas: np.ndarray) -> Dict[str, np.ndarray]:
    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    alpha_bars_prev = np.concatenate([[1.0], alpha_bars[:-1]])
    sigmas = np.sqrt((1.0 - alpha_bars_prev) / (1.0 - alpha_bars) * betas)
    return {
        "alphas": alphas,
        "alpha_bars": alpha_bars,
        "alpha_bars_prev": alpha_bars_prev,
        "sigmas": sigmas,
    }


@dataclass(frozen=True, eq=False)
class DiffusionSchedule:
    T: int
    beta_start: float
    beta_end: float
    shape: ScheduleShape
    betas: np.ndarray = field(repr=False)
    alphas: np.ndarray = field(repr=False)
    alpha_bars: np.ndarray = field(repr=False)
    alpha_bars_prev: np.ndarray = field(repr=False)
    sigmas: np.ndarray = field(repr=False)

    def spec(self) -> dict:
        """What checkpoints store; arrays are recomputed from it on load."""
        return {"T": self.T, "beta_start": self.beta_start, "beta_end": self.beta_end, "shape": self.shape}

    def checksum(self) -> str:
        h = hashlib.sha256()
        for name in ("betas", "alphas", "alpha_bars", "alpha_bars_prev", "sigmas"):
            h.update(name.encode())
            h.update(np.ascontiguousarray(getattr(self, name), dtype="<f8").tobytes())
        return h.hexdigest()

    def is_consistent(self) -> bool:
        """Derived arrays are bit-identical to a recomputation from betas."""
        derived = _derive(self.betas)
        return all(np.array_equal(getattr(self, k), v) for k, v in derived.items())

    def verify(self, expected_checksum: str) -> "DiffusionSchedule":
        if not self.is_consistent():
            raise DataError("schedule arrays are not a function of its betas")
        actual = self.checksum()
        if actual != expected_checksum:
            raise DataError(f"schedule checksum mismatch: stored {expected_checksum[:12]}, recomputed {actual[:12]}")
        return self

    @classmethod
    def from_config(cls, config: ScheduleConfig) -> "DiffusionSchedule":
        return make_schedule(config.T, config.beta_start, config.beta_end, config.shape)

    @classmethod
    def from_spec(cls, spec: dict) -> "DiffusionSchedule":
        try:
            return cls.from_config(ScheduleConfig(**spec))
        except (TypeError, ValueError) as e:
            raise DataError(f"invalid schedule spec {spec!r}: {e}") from e


def make_schedule(
    T: int = 100, beta_start: float = 1e-4, beta_end: float = 0.05, shape: ScheduleShape = "linear"
) -> DiffusionSchedule:
    """Linear betas from beta_start to beta_end inclusive."""
    if T < 1:
        raise DataError(f"T must be >= 1, got {T}")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise DataError(f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")
    if shape != "linear":
        raise DataError(f"unsupported schedule shape {shape!r}")

    betas = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    derived = _derive(betas)
    for arr in (betas, *derived.values()):
        arr.setflags(write=False)
    sched = DiffusionSchedule(T=T, beta_start=beta_start, beta_end=beta_end, shape=shape, betas=betas, **derived)
    logger.debug(f"Schedule T={T}, alpha_bar_T={sched.alpha_bars[-1]:.4g}")
    return sched

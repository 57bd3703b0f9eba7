"""Synthetic images, corpora and tiny configs for testing"""

import math
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import torch
from PIL import Image

from dual_diffusion_sr.degradation.ops import degrade
from dual_diffusion_sr.kernels.kernelgen import sample_params
from dual_diffusion_sr.models.config_models import RunConfig
from dual_diffusion_sr.models.kernel_models import KernelParams
from dual_diffusion_sr.pipeline.common import TrainingSet
from dual_diffusion_sr.utils.config_loader import read_run_config
from dual_diffusion_sr.utils.image_io import uint8_to_tensor

REPO_ROOT = Path(__file__).resolve().parents[2]
TEST_CONFIG_PATH = REPO_ROOT / "data" / "test_config.yaml"
DEFAULT_CONFIG_PATH = REPO_ROOT / "data" / "default_config.yaml"


def tiny_config(**sections) -> RunConfig:
    """data/test_config.yaml with per-section overrides, e.g. train={"seed": 3}."""
    config = read_run_config(str(TEST_CONFIG_PATH))
    updates = {}
    for name, values in sections.items():
        updates[name] = getattr(config, name).model_copy(update=values)
    return config.model_copy(update=updates)


def smooth_image(height: int, width: int, seed: int = 0) -> np.ndarray:
    """(H, W, 3) uint8 with gradients, stripes and a little texture, natural enough for blur tests."""
    rng = np.random.default_rng(seed)
    rows = np.linspace(0.0, 1.0, height)[:, None]
    cols = np.linspace(0.0, 1.0, width)[None, :]
    channels = []
    for c in range(3):
        fx, fy = rng.uniform(1.0, 4.0, size=2)
        phase = rng.uniform(0.0, 2 * math.pi)
        base = 0.5 + 0.25 * np.sin(2 * math.pi * (fx * cols + fy * rows) + phase)
        base = base + 0.2 * (rows * (c - 1) + cols * (1 - c) / 2)
        channels.append(base + 0.05 * rng.standard_normal((height, width)))
    img = np.clip(np.stack(channels, axis=-1), 0.0, 1.0)
    return np.round(img * 255.0).astype(np.uint8)


def write_corpus(directory: Path, count: int = 3, size: int = 80, seed: int = 0) -> List[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        path = directory / f"img_{i:02d}.png"
        Image.fromarray(smooth_image(size, size + 8 * i, seed + i)).save(path)
        paths.append(path)
    return paths


def write_corrupt_image(path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"\x89PNG\r\n\x1a\nthis is not a png")
    return path


def tiny_training_set(
    config: RunConfig,
    count: int = 4,
    seed: int = 0,
    fixed_params: Optional[KernelParams] = None,
) -> TrainingSet:
    """In-memory triplets at the config's patch size, degraded exactly as gen-data does."""
    rng = np.random.default_rng(seed)
    size, s = config.dataset.patch_size, config.dataset.scale
    hr, lr, kernels = [], [], []
    for i in range(count):
        img = uint8_to_tensor(smooth_image(size, size, seed * 100 + i))
        params = fixed_params if fixed_params is not None else sample_params(rng)
        low, k = degrade(img, params, s, config.dataset.kernel_size)
        hr.append(img)
        lr.append(low)
        kernels.append(k)
    return TrainingSet.from_tensors(hr, lr, kernels, config.dataset.kernel_scale)


def random_lr(config: RunConfig, lr_size: Sequence[int], seed: int = 0) -> torch.Tensor:
    """Signed-range (C, h, w) LR image."""
    g = torch.Generator().manual_seed(seed)
    c = config.architecture.color_channels
    return torch.rand((c, *lr_size), generator=g) * 2.0 - 1.0

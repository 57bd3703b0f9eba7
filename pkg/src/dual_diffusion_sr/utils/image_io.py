"""PNG codecs and value-range conversions.

On disk images are 8-bit PNG. In memory they are float32 tensors shaped
(C, H, W) in the unit range [0, 1] (metrics) or the signed range [-1, 1]
(networks).
"""

import io
import logging
from pathlib import Path
from typing import List, Literal

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

from ..errors import DataError
from .file_ops import PathLike, atomic_write_bytes

logger = logging.getLogger(__name__)

ValueRange = Literal["unit", "signed"]
RANGES = {"unit": (0.0, 1.0), "signed": (-1.0, 1.0)}

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".webp"}


def range_bounds(value_range: ValueRange) -> tuple:
    try:
        return RANGES[value_range]
    except KeyError:
        raise DataError(f"unknown value range {value_range!r}") from None


def to_signed(img: torch.Tensor) -> torch.Tensor:
    return img * 2.0 - 1.0


def to_unit(img: torch.Tensor) -> torch.Tensor:
    return (img + 1.0) / 2.0


def quantize(img: torch.Tensor) -> torch.Tensor:
    """Round a unit-range image to the 8-bit grid, staying in float."""
    return torch.round(img.clamp(0.0, 1.0) * 255.0) / 255.0


def decode_rgb(path: PathLike) -> np.ndarray:
    """Decode any Pillow-readable file to an (H, W, 3) uint8 array."""
    try:
        with Image.open(path) as im:
            im.load()
            return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()
    except (UnidentifiedImageError, OSError, ValueError) as e:
        raise DataError(f"cannot decode image {path}: {e}") from e


def uint8_to_tensor(arr: np.ndarray) -> torch.Tensor:
    """(H, W, C) uint8 -> (C, H, W) float32 in [0, 1]."""
    return torch.from_numpy(arr.astype(np.float32) / np.float32(255.0)).permute(2, 0, 1).contiguous()


def tensor_to_uint8(img: torch.Tensor) -> np.ndarray:
    """(C, H, W) unit-range tensor -> (H, W, C) uint8."""
    if img.dim() != 3:
        raise DataError(f"expected a (C, H, W) image, got shape {tuple(img.shape)}")
    q = torch.round(img.detach().cpu().float().clamp(0.0, 1.0) * 255.0).to(torch.uint8)
    return q.permute(1, 2, 0).numpy()


def read_png(path: PathLike) -> torch.Tensor:
    """Read an image file as a 3-channel unit-range tensor."""
    return uint8_to_tensor(decode_rgb(path))


def encode_png(arr: np.ndarray) -> bytes:
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def write_png(path: PathLike, img: torch.Tensor, value_range: ValueRange = "unit") -> Path:
    """Quantise and write an image; signed-range inputs are mapped [-1, 1] -> [0, 255]."""
    if value_range == "signed":
        img = to_unit(img)
    return atomic_write_bytes(path, encode_png(tensor_to_uint8(img)))


def write_gray_png(path: PathLike, arr: np.ndarray) -> Path:
    return atomic_write_bytes(path, encode_png(np.asarray(arr, dtype=np.uint8)))


def list_images(path: PathLike) -> List[Path]:
    """A single file, or the image files of a directory in sorted order."""
    path = Path(path)
    if path.is_file():
        return [path]
    if not path.is_dir():
        raise DataError(f"no such file or directory: {path}")
    return sorted(p for p in path.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)

"""Synthetic (HR, LR, kernel) dataset generation"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import torch

from ..errors import DataError
from ..kernels.kernelgen import sample_params, vector_to_kernel
from ..models.dataset_models import DatasetManifest, ManifestEntry
from ..models.kernel_models import DEFAULT_KERNEL_SIZE, Kernel, KernelParams
from ..utils.file_ops import PathLike, atomic_write_bytes, atomic_write_json
from ..utils.image_io import decode_rgb, encode_png, read_png, tensor_to_uint8, uint8_to_tensor
from ..utils.tensor_container import read_container, write_container
from .ops import degrade

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def _load_corpus(corpus_dir: Path, patch_size: int) -> Tuple[List[Tuple[str, np.ndarray]], List[str]]:
    if not corpus_dir.is_dir():
        raise DataError(f"corpus directory not found: {corpus_dir}")
    usable, skipped = [], []
    for path in sorted(p for p in corpus_dir.iterdir() if p.is_file() and not p.name.startswith(".")):
        try:
            arr = decode_rgb(path)
        except DataError as e:
            logger.warning(f"Skipping undecodable corpus file {path.name}: {e}")
            skipped.append(path.name)
            continue
        if min(arr.shape[:2]) < patch_size:
            logger.warning(f"Skipping {path.name}: {arr.shape[1]}x{arr.shape[0]} is smaller than patch {patch_size}")
            skipped.append(path.name)
            continue
        usable.append((path.name, arr))
    return usable, skipped


def patch_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream per patch, so patches can be generated in any order."""
    return np.random.default_rng([seed, index])


def generate_dataset(
    corpus_dir: PathLike,
    out_dir: PathLike,
    s: int = 4,
    patch_size: int = 64,
    count: int = 100,
    seed: int = 0,
    kernel_size: int = DEFAULT_KERNEL_SIZE,
    fixed_params: Optional[KernelParams] = None,
    workers: int = 1,
) -> DatasetManifest:
    """
    Cut `count` HR patches at random offsets, blur each with a freshly sampled
    kernel (or `fixed_params`) and decimate by `s`.

    Writes out_dir/{hr,lr}/NNNNNN.png, out_dir/ker/NNNNNN.tns and
    out_dir/manifest.json; manifest paths are relative to out_dir.
    """
    if count < 1:
        raise DataError(f"count must be positive, got {count}")
    if patch_size % s:
        raise DataError(f"patch size {patch_size} is not divisible by scale {s}")
    corpus_dir, out_dir = Path(corpus_dir), Path(out_dir)
    usable, skipped = _load_corpus(corpus_dir, patch_size)
    if not usable:
        raise DataError(f"empty corpus: no usable images of at least {patch_size}px in {corpus_dir}")
    logger.info(f"Corpus: {len(usable)} usable images, {len(skipped)} skipped")

    def make_entry(index: int) -> ManifestEntry:
        rng = patch_rng(seed, index)
        source, arr = usable[int(rng.integers(len(usable)))]
        top = int(rng.integers(0, arr.shape[0] - patch_size + 1))
        left = int(rng.integers(0, arr.shape[1] - patch_size + 1))
        params = fixed_params if fixed_params is not None else sample_params(rng)

        crop = np.ascontiguousarray(arr[top:top + patch_size, left:left + patch_size])
        hr = uint8_to_tensor(crop)
        lr, k = degrade(hr, params, s, kernel_size)

        stem = f"{index:06d}"
        entry = ManifestEntry(
            hr=f"hr/{stem}.png",
            lr=f"lr/{stem}.png",
            ker=f"ker/{stem}.tns",
            lambda1=params.lambda1,
            lambda2=params.lambda2,
            theta=params.theta,
            source=source,
            top=top,
            left=left,
        )
        atomic_write_bytes(out_dir / entry.hr, encode_png(crop))
        atomic_write_bytes(out_dir / entry.lr, encode_png(tensor_to_uint8(lr)))
        write_container(out_dir / entry.ker, {"kernel": k.values}, meta=params.model_dump())
        return entry

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        entries = list(pool.map(make_entry, range(count)))

    manifest = DatasetManifest(
        seed=seed,
        s=s,
        patch_size=patch_size,
        kernel_size=kernel_size,
        skipped=len(skipped),
        skipped_files=skipped,
        entries=entries,
    )
    atomic_write_json(out_dir / MANIFEST_NAME, manifest.model_dump(mode="json"))
    logger.info(f"Wrote {count} triplets to {out_dir}")
    return manifest


def load_kernel(path: PathLike) -> Kernel:
    tensors, _ = read_container(path)
    if "kernel" not in tensors:
        raise DataError(f"{path} holds no 'kernel' tensor")
    return vector_to_kernel(tensors["kernel"].astype(np.float64))


def load_triplet(root: PathLike, entry: ManifestEntry) -> Tuple[torch.Tensor, torch.Tensor, Kernel]:
    """(HR, LR) as unit-range tensors and the ground-truth kernel."""
    root = Path(root)
    return read_png(root / entry.hr), read_png(root / entry.lr), load_kernel(root / entry.ker)

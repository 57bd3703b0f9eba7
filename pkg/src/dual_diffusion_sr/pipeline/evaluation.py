"""PSNR scoring of predictions against a manifest, with an on-the-fly bicubic baseline"""

import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence

import torch

from ..degradation.dataset import load_kernel, load_triplet
from ..degradation.metrics import kernel_l2, psnr
from ..degradation.ops import bicubic_resize
from ..kernels.kernelgen import project_kernel
from ..models.kernel_models import Kernel
from ..models.report_models import EvalReport, EvalRow
from ..utils.config_loader import read_manifest
from ..utils.file_ops import PathLike
from ..utils.image_io import quantize, read_png

logger = logging.getLogger(__name__)

RUN_INFO_NAME = "run_info.json"
KERNEL_DIR = "kernels"


def score_sample(
    name: str,
    pred: torch.Tensor,
    hr: torch.Tensor,
    lr: torch.Tensor,
    s: int,
    pred_kernel: Optional[Kernel] = None,
    true_kernel: Optional[Kernel] = None,
) -> EvalRow:
    """All images unit range. The 8-bit baseline is what a bicubic PNG would score."""
    up = bicubic_resize(lr, s, value_range="unit")
    l2 = None
    if pred_kernel is not None and true_kernel is not None:
        l2 = kernel_l2(project_kernel(pred_kernel.values), true_kernel)
    return EvalRow(
        name=name,
        psnr_sr=psnr(pred, hr),
        psnr_bicubic=psnr(quantize(up), hr),
        psnr_bicubic_float=psnr(up, hr),
        kernel_l2=l2,
    )


def evaluate_tensors(
    names: Sequence[str],
    preds: Sequence[torch.Tensor],
    hrs: Sequence[torch.Tensor],
    lrs: Sequence[torch.Tensor],
    s: int,
    pred_kernels: Optional[Sequence[Kernel]] = None,
    true_kernels: Optional[Sequence[Kernel]] = None,
    **metadata,
) -> EvalReport:
    """In-memory scoring; useful for float predictions that never touch disk."""
    rows = []
    for i, name in enumerate(names):
        rows.append(
            score_sample(
                name,
                preds[i],
                hrs[i],
                lrs[i],
                s,
                pred_kernels[i] if pred_kernels is not None else None,
                true_kernels[i] if true_kernels is not None else None,
            )
        )
    return EvalReport.from_rows(rows, **metadata)


def _run_info(pred_dir: Path) -> dict:
    path = pred_dir / RUN_INFO_NAME
    if not path.exists():
        return {}
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError:
        logger.warning(f"Ignoring unreadable {path}")
        return {}


def evaluate(pred_dir: PathLike, manifest_path: PathLike) -> EvalReport:
    """
    Score <pred_dir>/<stem>.png against every manifest entry.

    A kernel tensor at <pred_dir>/kernels/<stem>.tns adds the kernel error.
    Entries without a prediction are listed in `missing`, not scored.
    """
    pred_dir = Path(pred_dir)
    manifest = read_manifest(str(manifest_path))
    root = Path(manifest_path).parent

    rows: List[EvalRow] = []
    missing: List[str] = []
    for entry in manifest.entries:
        pred_path = pred_dir / f"{entry.stem}.png"
        if not pred_path.exists():
            missing.append(entry.stem)
            continue
        hr, lr, true_kernel = load_triplet(root, entry)
        kernel_path = pred_dir / KERNEL_DIR / f"{entry.stem}.tns"
        pred_kernel = load_kernel(kernel_path) if kernel_path.exists() else None
        rows.append(score_sample(entry.stem, read_png(pred_path), hr, lr, manifest.s, pred_kernel, true_kernel))

    if missing:
        logger.warning(f"{len(missing)} predictions missing: {', '.join(missing)}")
    info = _run_info(pred_dir)
    seeds = {"dataset": manifest.seed}
    if "seed" in info:
        seeds["inference"] = info["seed"]
    if "train_seed" in info:
        seeds["train"] = info["train_seed"]
    return EvalReport.from_rows(rows, seeds=seeds, config_hash=info.get("config_hash"), missing=missing)

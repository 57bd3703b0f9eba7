"""Evaluation report models"""

import math
import statistics
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field

PSNR_IDENTICAL = math.inf


def _finite_mean(values: List[float]) -> float:
    if not values:
        return math.nan
    return math.fsum(values) / len(values)


class EvalRow(BaseModel):
    """Scores of a single prediction against its ground truth."""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    name: str
    psnr_sr: float = Field(..., description="PSNR of the prediction vs HR (8-bit files)")
    psnr_bicubic: float = Field(..., description="PSNR of the 8-bit bicubic upsample vs HR")
    psnr_bicubic_float: float = Field(..., description="PSNR of the float bicubic upsample vs HR")
    kernel_l2: Optional[float] = Field(None, description="Mean squared error of the projected kernel")


class EvalAggregate(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    mean: float
    median: float

    @classmethod
    def of(cls, values: List[float]) -> "EvalAggregate":
        if not values:
            return cls(mean=math.nan, median=math.nan)
        return cls(mean=_finite_mean(values), median=float(statistics.median(values)))

    def matches(self, values: List[float], rel_tol: float = 1e-9) -> bool:
        other = EvalAggregate.of(values)
        return _close(self.mean, other.mean, rel_tol) and _close(self.median, other.median, rel_tol)


def _close(a: float, b: float, rel_tol: float) -> bool:
    if math.isnan(a) and math.isnan(b):
        return True
    if math.isinf(a) or math.isinf(b):
        return a == b
    return math.isclose(a, b, rel_tol=rel_tol, abs_tol=1e-12)


class EvalReport(BaseModel):
    """
    Per-sample PSNR and kernel errors plus their aggregates.

    Identical images score +inf (PSNR_IDENTICAL); the JSON dump writes it as
    the `Infinity` constant.
    """

    model_config = ConfigDict(ser_json_inf_nan="constants")

    rows: List[EvalRow] = Field(default_factory=list)
    psnr_sr: EvalAggregate
    psnr_bicubic: EvalAggregate
    psnr_bicubic_float: EvalAggregate
    kernel_l2: Optional[EvalAggregate] = None
    seeds: dict = Field(default_factory=dict)
    config_hash: Optional[str] = None
    missing: List[str] = Field(default_factory=list)

    @classmethod
    def from_rows(cls, rows: List[EvalRow], **metadata) -> "EvalReport":
        kernel_values = [r.kernel_l2 for r in rows if r.kernel_l2 is not None]
        return cls(
            rows=rows,
            psnr_sr=EvalAggregate.of([r.psnr_sr for r in rows]),
            psnr_bicubic=EvalAggregate.of([r.psnr_bicubic for r in rows]),
            psnr_bicubic_float=EvalAggregate.of([r.psnr_bicubic_float for r in rows]),
            kernel_l2=EvalAggregate.of(kernel_values) if kernel_values else None,
            **metadata,
        )

    def is_consistent(self) -> bool:
        """Aggregates equal a recomputation from the per-sample rows."""
        checks = [
            self.psnr_sr.matches([r.psnr_sr for r in self.rows]),
            self.psnr_bicubic.matches([r.psnr_bicubic for r in self.rows]),
            self.psnr_bicubic_float.matches([r.psnr_bicubic_float for r in self.rows]),
        ]
        kernel_values = [r.kernel_l2 for r in self.rows if r.kernel_l2 is not None]
        if self.kernel_l2 is not None:
            checks.append(self.kernel_l2.matches(kernel_values))
        else:
            checks.append(not kernel_values)
        return all(checks)

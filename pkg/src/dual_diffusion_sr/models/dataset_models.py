"""Dataset manifest models"""

import math
from pathlib import Path
from typing import List

from pydantic import BaseModel, Field

from .kernel_models import LAMBDA_MAX, LAMBDA_MIN, KernelParams

MANIFEST_SCHEMA_VERSION = 1


class ManifestEntry(BaseModel):
    """One generated (HR patch, LR image, kernel) triplet; paths are relative to the manifest."""

    hr: str
    lr: str
    ker: str
    lambda1: float = Field(..., ge=LAMBDA_MIN, le=LAMBDA_MAX)
    lambda2: float = Field(..., ge=LAMBDA_MIN, le=LAMBDA_MAX)
    theta: float = Field(..., ge=0.0, lt=math.pi)
    source: str = Field("", description="Corpus file the HR patch was cut from")
    top: int = 0
    left: int = 0

    @property
    def stem(self) -> str:
        return Path(self.hr).stem

    def kernel_params(self) -> KernelParams:
        return KernelParams(lambda1=self.lambda1, lambda2=self.lambda2, theta=self.theta)


class DatasetManifest(BaseModel):
    """Index of a generated dataset, written as manifest.json next to hr/, lr/ and ker/."""

    schema_version: int = MANIFEST_SCHEMA_VERSION
    seed: int
    s: int = Field(..., ge=1)
    patch_size: int = Field(..., ge=1)
    kernel_size: int = 24
    skipped: int = Field(0, ge=0, description="Corpus files that could not be used")
    skipped_files: List[str] = Field(default_factory=list)
    entries: List[ManifestEntry] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

"""Blur-kernel data models"""

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

LAMBDA_MIN = 0.2
LAMBDA_MAX = 4.0
DEFAULT_KERNEL_SIZE = 24


class KernelParams(BaseModel):
    """
    Eigen-parameterisation of an anisotropic Gaussian blur.

    lambda1 is the variance along the row axis and lambda2 along the column
    axis before the rotation by theta is applied.
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    lambda1: float = Field(..., ge=LAMBDA_MIN, le=LAMBDA_MAX, description="First covariance eigenvalue (px^2)")
    lambda2: float = Field(..., ge=LAMBDA_MIN, le=LAMBDA_MAX, description="Second covariance eigenvalue (px^2)")
    theta: float = Field(..., ge=0.0, lt=math.pi, description="Rotation angle in radians")

    def swapped(self) -> "KernelParams":
        """Same covariance expressed with the eigenvalues exchanged."""
        return KernelParams(
            lambda1=self.lambda2,
            lambda2=self.lambda1,
            theta=(self.theta + math.pi / 2) % math.pi,
        )

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.lambda1, self.lambda2, self.theta)


class Kernel(BaseModel):
    """
    A square grid of blur weights.

    Rendered kernels are non-negative and sum to one; kernels rebuilt from
    diffusion states are not, so those invariants are checked on demand
    rather than at construction.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray

    @field_validator("values")
    @classmethod
    def validate_grid(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"kernel grid must be square 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("kernel values must be finite")
        return v

    @property
    def size(self) -> int:
        return int(self.values.shape[0])

    def is_normalized(self, atol: float = 1e-6) -> bool:
        """Check the rendered-kernel invariants: non-negative, unit sum."""
        return bool(np.all(self.values >= 0) and abs(float(self.values.sum()) - 1.0) <= atol)

"""
Anisotropic Gaussian blur kernels.

A kernel is parameterised by the eigenvalues (lambda1, lambda2) of its
covariance and a rotation theta. Grid coordinates are (row offset, column
offset) measured from the fractional centre (size - 1) / 2, so an even
24x24 grid is centred at (11.5, 11.5) and stays symmetric under flips and
90 degree rotations. Rendering is done in float64.
"""

import math
from typing import Optional, Union

import numpy as np
import torch

from ..errors import DataError
from ..models.kernel_models import (
    DEFAULT_KERNEL_SIZE,
    LAMBDA_MAX,
    LAMBDA_MIN,
    Kernel,
    KernelParams,
)

Seed = Union[int, np.random.Generator, None]


def _rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=np.float64)


def covariance_from_params(p: KernelParams) -> np.ndarray:
    """Sigma = R(theta) diag(lambda1, lambda2) R(theta)^T."""
    values = p.as_tuple()
    if not all(math.isfinite(v) for v in values):
        raise DataError(f"kernel parameters must be finite, got {values}")
    for name, lam in (("lambda1", p.lambda1), ("lambda2", p.lambda2)):
        if not LAMBDA_MIN <= lam <= LAMBDA_MAX:
            raise DataError(f"{name}={lam} outside [{LAMBDA_MIN}, {LAMBDA_MAX}]")
    if not 0.0 <= p.theta < math.pi:
        raise DataError(f"theta={p.theta} outside [0, pi)")

    rot = rotation_matrix(p.theta)
    sigma = rot @ np.diag([p.lambda1, p.lambda2]) @ rot.T
    # exact symmetry; the two off-diagonal products can differ in the last ulp
    off = 0.5 * (sigma[0, 1] + sigma[1, 0])
    sigma[0, 1] = sigma[1, 0] = off
    return sigma


def grid_offsets(size: int) -> np.ndarray:
    return np.arange(size, dtype=np.float64) - (size - 1) / 2.0


def render_kernel(sigma: np.ndarray, size: int = DEFAULT_KERNEL_SIZE) -> Kernel:
    """Sample exp(-x^T Sigma^-1 x / 2) on the grid and normalise to unit sum."""
    if size < 3:
        raise DataError(f"kernel size must be >= 3, got {size}")
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.shape != (2, 2) or not np.all(np.isfinite(sigma)):
        raise DataError(f"sigma must be a finite 2x2 matrix, got {sigma!r}")
    if abs(sigma[0, 1] - sigma[1, 0]) > 1e-12 * max(1.0, float(np.abs(sigma).max())):
        raise DataError("sigma must be symmetric")
    if np.linalg.eigvalsh(sigma).min() <= 0:
        raise DataError("sigma must be positive definite")

    inv = np.linalg.inv(sigma)
    a, b, d = inv[0, 0], 0.5 * (inv[0, 1] + inv[1, 0]), inv[1, 1]
    r = grid_offsets(size)
    rows, cols = r[:, None], r[None, :]
    quad = a * rows * rows + 2.0 * b * rows * cols + d * cols * cols
    values = np.exp(-0.5 * quad)
    return Kernel(values=values / values.sum())


def kernel_from_params(p: KernelParams, size: int = DEFAULT_KERNEL_SIZE) -> Kernel:
    return render_kernel(covariance_from_params(p), size)


def sample_params(rng: Seed = None) -> KernelParams:
    """lambda1, lambda2 ~ U[0.2, 4]; theta ~ U[0, pi). Draw order is fixed."""
    rng = _rng(rng)
    lambda1 = float(rng.uniform(LAMBDA_MIN, LAMBDA_MAX))
    lambda2 = float(rng.uniform(LAMBDA_MIN, LAMBDA_MAX))
    theta = float(rng.uniform(0.0, math.pi))
    # uniform() may round up onto the open bound
    theta = min(theta, math.nextafter(math.pi, 0.0))
    return KernelParams(lambda1=lambda1, lambda2=lambda2, theta=theta)


def kernel_to_vector(k: Kernel) -> np.ndarray:
    """Row-major flattening, length size**2."""
    return k.values.reshape(-1).copy()


def vector_to_kernel(v, size: Optional[int] = None) -> Kernel:
    """Inverse of kernel_to_vector. Does not renormalise: diffusion states are noisy."""
    if isinstance(v, torch.Tensor):
        v = v.detach().cpu().numpy()
    v = np.asarray(v).reshape(-1)
    if size is None:
        size = math.isqrt(v.size)
    if size * size != v.size:
        raise DataError(f"vector of length {v.size} does not hold a {size}x{size} kernel")
    return Kernel(values=v.reshape(size, size).copy())


def delta_kernel(size: int = DEFAULT_KERNEL_SIZE) -> Kernel:
    """Identity element of convolve2d: a single 1 at index (size // 2, size // 2)."""
    values = np.zeros((size, size), dtype=np.float64)
    values[size // 2, size // 2] = 1.0
    return Kernel(values=values)


def project_kernel(v, size: Optional[int] = None) -> Kernel:
    """Clamp negatives to zero and renormalise; no positive mass gives the uniform kernel."""
    raw = vector_to_kernel(v, size).values.astype(np.float64)
    clipped = np.clip(raw, 0.0, None)
    total = clipped.sum()
    if total <= 0.0 or not math.isfinite(total):
        n = raw.shape[0]
        return Kernel(values=np.full((n, n), 1.0 / (n * n)))
    return Kernel(values=clipped / total)


def prior_mean_kernel(size: int = DEFAULT_KERNEL_SIZE, draws: int = 512, seed: int = 0) -> Kernel:
    """Monte-Carlo mean of the kernel prior: the best constant kernel estimate."""
    rng = np.random.default_rng(seed)
    acc = np.zeros((size, size), dtype=np.float64)
    for _ in range(draws):
        acc += kernel_from_params(sample_params(rng), size).values
    return Kernel(values=acc / acc.sum())


def kernel_moments(k: Kernel) -> np.ndarray:
    """Discrete 2x2 covariance of a kernel treated as a distribution over (row, col)."""
    p = k.values / k.values.sum()
    r = grid_offsets(k.size)
    rows, cols = np.meshgrid(r, r, indexing="ij")
    mr, mc = (p * rows).sum(), (p * cols).sum()
    dr, dc = rows - mr, cols - mc
    return np.array(
        [[(p * dr * dr).sum(), (p * dr * dc).sum()], [(p * dr * dc).sum(), (p * dc * dc).sum()]]
    )


def kernel_to_png(k: Kernel) -> np.ndarray:
    """Max-normalised 8-bit grayscale rendering for inspection."""
    values = np.clip(k.values, 0.0, None)
    peak = values.max()
    if peak <= 0:
        return np.zeros(values.shape, dtype=np.uint8)
    return np.round(values / peak * 255.0).astype(np.uint8)


def kernel_to_tensor(k: Kernel, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(k.values)).to(dtype)

"""Anisotropic Gaussian degradation kernels"""

from .kernelgen import (
    covariance_from_params,
    delta_kernel,
    kernel_from_params,
    kernel_moments,
    kernel_to_png,
    kernel_to_tensor,
    kernel_to_vector,
    prior_mean_kernel,
    project_kernel,
    render_kernel,
    sample_params,
    vector_to_kernel,
)

__all__ = [
    "covariance_from_params",
    "delta_kernel",
    "kernel_from_params",
    "kernel_moments",
    "kernel_to_png",
    "kernel_to_tensor",
    "kernel_to_vector",
    "prior_mean_kernel",
    "project_kernel",
    "render_kernel",
    "sample_params",
    "vector_to_kernel",
]

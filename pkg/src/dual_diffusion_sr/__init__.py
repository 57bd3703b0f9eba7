"""Dual Diffusion SR - blind super-resolution with a kernel chain and a residual chain."""

__version__ = "0.1.0"

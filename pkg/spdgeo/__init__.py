"""Kernel Riemannian and Finsler metrics on positive definite matrices."""

__version__ = "1.0.0"

"""Monotone finite-difference schemes for Hamilton-Jacobi equations on the
Wasserstein space over a finite graph."""

__version__ = "0.1.0"

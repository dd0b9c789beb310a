"""Numerical laboratory for the multi-layer stochastic heat equation."""

__version__ = "0.1.0"

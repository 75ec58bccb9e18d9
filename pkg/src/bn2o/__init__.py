"""Exact and reduced-complexity inference for two-layer noisy-OR networks."""

__version__ = "0.3.0"

"""Averaged Green matrices for divergence-form elliptic systems in three dimensions."""

__version__ = "0.1.0"

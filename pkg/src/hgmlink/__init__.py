"""Probabilistic record linkage with hierarchical latent-variable models."""

__version__ = "0.1.0"

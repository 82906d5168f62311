"""Contrastive online change point detection."""

__version__ = "0.1.0"

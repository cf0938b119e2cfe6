"""Desk-scale MixBoost laboratory: masked-boost training, game interactions, safety metrics."""

__version__ = "0.1.0"

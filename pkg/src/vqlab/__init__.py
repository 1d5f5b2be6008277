"""Numerical laboratory for q-variation inequalities on finite models."""

from .version import VERSION as __version__

__all__ = ["__version__"]

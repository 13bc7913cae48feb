"""Baseband ISAC simulation and range/velocity estimation toolkit."""

from .constants import SPEED_OF_LIGHT

__version__ = "0.1.0"

__all__ = ["SPEED_OF_LIGHT", "__version__"]

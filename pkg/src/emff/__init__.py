"""Decentralized electromagnetic formation control with frequency-multiplexed coil currents."""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]

"""Deterministic rate-coded self-organizing neural network simulator."""

__version__ = "0.1.0"

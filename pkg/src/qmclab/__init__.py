"""Quasi-Monte Carlo error-rate laboratory."""

__version__ = "0.1.0"

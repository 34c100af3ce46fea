"""Numerical toolbox for discriminating quantum channels, superchannels and combs."""

__version__ = "0.1.0"

"""Commute-time spectral embedding of time-series datasets."""

__version__ = "0.1.0"

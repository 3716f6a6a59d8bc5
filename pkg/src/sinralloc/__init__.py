"""Spectrum admission and channel selection under individual SINR targets."""

__version__ = "0.1.0"

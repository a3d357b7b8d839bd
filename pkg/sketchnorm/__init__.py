"""Sketchnorm: randomized relative-error estimation of the spectral norm."""
__version__ = "0.1.0"

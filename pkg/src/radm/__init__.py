"""Pseudo-spectral solver for the rotational approximate deconvolution model."""

__version__ = "0.1.0"

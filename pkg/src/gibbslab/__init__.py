"""Numerical laboratory for Patterson-Sullivan-Gibbs measures of Fuchsian groups."""

__version__ = "0.1.0"

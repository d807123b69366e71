"""Numerical laboratory for the parabolic Anderson model with Riesz-colored noise."""

__version__ = "0.1.0"

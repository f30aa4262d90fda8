"""Rearrangements, variable-exponent Lorentz norms and Sobolev embedding diagnostics on balls."""

__version__ = "0.1.0"

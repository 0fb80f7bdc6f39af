"""Spectral solvers for CGO solutions of the defocusing DS-II d-bar system on the unit disk."""

__version__ = "0.1.0"

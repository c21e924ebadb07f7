"""Numerical laboratory for twisted waveguides: thresholds, eigenvalue sweeps,
effective 1D models and Hardy-constant certificates."""

__version__ = "0.1.0"

"""Resonant-triad toolkit and spectral solvers for rotating flow on the unit torus."""

from . import fields, helical, lattice, operators, pell, resonance, solver

__all__ = ["fields", "helical", "lattice", "operators", "pell", "resonance", "solver"]
__version__ = "0.1.0"

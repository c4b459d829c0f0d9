"""Numerical laboratory for J1-J3 type singularly perturbed energies with vortices."""

__version__ = "0.1.0"

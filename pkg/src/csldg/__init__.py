"""Characteristic-Galerkin semi-Lagrangian DG for 2D linear transport."""

__version__ = "0.1.0"

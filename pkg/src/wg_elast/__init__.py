"""Weak Galerkin Hellinger-Reissner elasticity on polytopal meshes."""

__version__ = "0.1.0"

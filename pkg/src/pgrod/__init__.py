"""Petrov-Galerkin Cosserat rod finite elements."""

__version__ = "0.1.0"

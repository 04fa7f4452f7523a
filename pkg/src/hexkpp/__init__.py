"""Minimal wave speeds and Fisher-KPP fronts on the hexagonal lattice."""

__version__ = "0.1.0"

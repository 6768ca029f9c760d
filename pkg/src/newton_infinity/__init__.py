"""Polynomial optimization at infinity: Newton polyhedra, non-degeneracy
and Mangasarian-Fromovitz checks, infimum computation and attainability."""

__version__ = "0.1.0"

"""Copula analysis for random vectors with atomic marginals."""

__version__ = "0.1.0"

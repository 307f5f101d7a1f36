"""Limit cycles of normalized quadratic vector fields around a weak focus."""

__version__ = "0.1.0"

"""Linearizable flows with several isolated equilibria, built inside a
hyperbolic linear flow on R^3, plus numerical checks of their properties."""

__version__ = "0.1.0"

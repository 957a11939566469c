"""Bayesian learning of soft random geometric graphs."""

__version__ = "0.1.0"

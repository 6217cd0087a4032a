"""Primal-dual monotone-operator splitting toolkit."""

__version__ = "0.1.0"

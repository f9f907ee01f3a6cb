"""Uniform doubly stochastic matrices: samplers, statistics, volumes, harness."""

__version__ = "0.1.0"

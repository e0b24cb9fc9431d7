"""Queenons: limit objects of n-queens configurations, their entropy, and
randomized construction of configurations near a prescribed queenon."""

__version__ = "0.1.0"

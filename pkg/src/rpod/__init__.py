"""Randomized and balanced POD model reduction toolkit."""

__version__ = "0.1.0"

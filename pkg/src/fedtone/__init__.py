"""Aspect-based sentiment indices from central-bank minutes, plus macro regressions."""

__version__ = "0.1.0"

"""Computable subequations: margins on 2-jets, duality, convexity tests and a grid solver."""

__version__ = "0.1.0"

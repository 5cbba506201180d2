"""Non-adaptive sublinear matching-size estimation and its hard instances."""

__version__ = "0.1.0"

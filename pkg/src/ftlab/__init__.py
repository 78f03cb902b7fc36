"""Front tracking laboratory for 1-D hyperbolic conservation laws."""

__version__ = "0.1.0"

"""Construction and numerical verification of geodesically equivalent metric pairs."""

__version__ = "0.1.0"

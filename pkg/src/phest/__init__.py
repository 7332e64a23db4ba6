"""Penalized histogram estimation of the intensity of a random measure."""
__version__ = "0.1.0"

"""Ubiquitous-array channel estimation and precoding simulator."""

__version__ = "0.1.0"

"""Simulation of single-server quantum private information retrieval."""

__version__ = "0.1.0"

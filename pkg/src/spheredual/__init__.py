"""Exact dual linear-programming bounds for sphere packing densities."""

__version__ = "0.1.0"

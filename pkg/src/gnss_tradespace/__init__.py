"""GNSS space-segment tradespace exploration."""

__version__ = "0.1.0"

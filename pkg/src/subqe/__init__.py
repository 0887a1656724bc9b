"""Weakly supervised quality estimation for bilingual subtitle translations."""

__version__ = "0.1.0"

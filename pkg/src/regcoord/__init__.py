"""Approximate systems and plurisubharmonic weights for regular coordinate domains."""

__version__ = "0.1.0"

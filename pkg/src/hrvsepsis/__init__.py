"""Sepsis classification from heart rate variability metrics."""

__version__ = "0.1.0"

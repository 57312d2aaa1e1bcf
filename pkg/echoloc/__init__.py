"""Echoloc: simulated room acoustics to sound source localization."""

__version__ = "0.1.0"

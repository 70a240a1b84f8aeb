"""Rare-disease patient pathway simulation and alert-threshold optimisation."""

__version__ = "0.1.0"

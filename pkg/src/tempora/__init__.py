"""Temporal planning with time windows via local search on TDA-graphs."""
__version__ = "0.1.0"

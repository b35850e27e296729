"""Deterministic CSP over lazy interaction trees, with a state-machine
model compiler and an interactive animator."""

__version__ = "0.1.0"

"""Desk-scale emulation of quantum-assisted finite-sum optimization."""

__version__ = "0.1.0"

"""Simulation and experiment harness for loosely-stabilizing leader election
in population protocols."""

__version__ = "0.1.0"

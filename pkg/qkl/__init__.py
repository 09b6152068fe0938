"""Quantum-kernel stellar classification toolkit."""

__version__ = "1.0.0"

"""Evolve size-parameterized circuit-generator programs from families of QASM circuits."""

__version__ = "0.1.0"

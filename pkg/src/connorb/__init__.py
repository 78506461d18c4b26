"""Validated existence and transversality proofs for connecting orbits."""

__version__ = "0.1.0"

"""Surrogate-assisted design of interlocking ceramic panels under thermal shock."""

__version__ = "0.1.0"

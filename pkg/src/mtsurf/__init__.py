"""Marginally trapped spacelike surfaces in de Sitter 4-space: invariants,
null Gauss map, conformal invariants and integrable deformations."""

__version__ = "0.1.0"

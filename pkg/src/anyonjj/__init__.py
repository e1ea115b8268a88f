"""Exact diagonalization of anyonic Hubbard Josephson junctions."""

__version__ = "0.1.0"

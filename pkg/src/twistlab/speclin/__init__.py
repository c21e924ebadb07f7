"""Sparse symmetric linear algebra used by every discretised operator."""

from .cg import conjugate_gradient
from .eigen import (DEFAULT_SEED, DEFAULT_TOL, DENSE_LIMIT, EigenResult, dense_eigenpairs,
                    lobpcg, shift_invert, smallest_eigenpairs)
from .matrix import SparseSymMatrix, assemble_from_triplets
from .mmio import dump_matrix_market, load_matrix_market

__all__ = [
    "DEFAULT_SEED", "DEFAULT_TOL", "DENSE_LIMIT", "EigenResult", "SparseSymMatrix",
    "assemble_from_triplets", "conjugate_gradient", "dense_eigenpairs", "dump_matrix_market",
    "load_matrix_market", "lobpcg", "shift_invert", "smallest_eigenpairs",
]

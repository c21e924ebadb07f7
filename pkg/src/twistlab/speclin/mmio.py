"""Matrix Market coordinate I/O for :class:`SparseSymMatrix`.

Values are written with ``repr`` (shortest round-trip decimal), so a
dump/load cycle reproduces every value bit for bit.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..errors import AsymmetricInput
from .matrix import SparseSymMatrix

HEADER = "%%MatrixMarket matrix coordinate real symmetric"


def dump_matrix_market(mat: SparseSymMatrix, path) -> None:
    lower = sp.tril(mat.to_scipy()).tocoo()
    order = np.lexsort((lower.row, lower.col))
    with open(path, "w", encoding="ascii") as fh:
        fh.write(HEADER + "\n")
        fh.write(f"{mat.n} {mat.n} {lower.nnz}\n")
        for k in order:
            fh.write(f"{lower.row[k] + 1} {lower.col[k] + 1} {float(lower.data[k])!r}\n")


def load_matrix_market(path, sym_tol: float = 1e-12) -> SparseSymMatrix:
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip()
        if not header.lower().startswith("%%matrixmarket matrix coordinate real"):
            raise ValueError(f"unsupported Matrix Market header: {header!r}")
        symmetric = header.lower().endswith("symmetric")
        line = fh.readline()
        while line.startswith("%"):
            line = fh.readline()
        nrows, ncols, nnz = (int(t) for t in line.split())
        if nrows != ncols:
            raise AsymmetricInput("matrix is not square")
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz)
        for k in range(nnz):
            i, j, v = fh.readline().split()
            rows[k], cols[k], vals[k] = int(i) - 1, int(j) - 1, float(v)
    if symmetric:
        off = rows != cols
        rows, cols, vals = (np.concatenate([rows, cols[off]]),
                            np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, vals[off]]))
    coo = sp.coo_matrix((vals, (rows, cols)), shape=(nrows, nrows))
    return SparseSymMatrix.from_scipy(coo, sym_tol=sym_tol)

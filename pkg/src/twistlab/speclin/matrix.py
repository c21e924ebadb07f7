"""Compressed sparse symmetric matrices.

Both triangles are stored. Storage and mat-vec are backed by
``scipy.sparse.csr_matrix``; this class adds the symmetry contract,
banded export for the direct inner solver, and Matrix Market I/O.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import AsymmetricInput, DimensionMismatch, IndexOutOfRange

DEFAULT_SYM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SparseSymMatrix:
    """Immutable symmetric matrix in CSR form (both triangles stored).

    Use :func:`assemble_from_triplets` or :meth:`from_scipy` rather than
    calling the constructor directly; those validate the invariants.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    sym_tol: float = DEFAULT_SYM_TOL
    _csr: sp.csr_matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        csr = sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.n, self.n))
        for arr in (self.indptr, self.indices, self.data):
            arr.setflags(write=False)
        object.__setattr__(self, "_csr", csr)

    # construction -------------------------------------------------------

    @classmethod
    def from_scipy(cls, mat, sym_tol: float = DEFAULT_SYM_TOL, symmetrize: bool = False):
        """Wrap a scipy sparse (or dense) square matrix.

        With ``symmetrize=True`` the matrix is replaced by ``(M + M.T)/2``,
        which is exactly symmetric in floating point; otherwise the symmetry
        tolerance is checked and :class:`AsymmetricInput` raised on failure.
        """
        csr = sp.csr_matrix(mat, dtype=float)
        if csr.shape[0] != csr.shape[1]:
            raise DimensionMismatch(f"matrix is not square: {csr.shape}")
        if symmetrize:
            csr = ((csr + csr.T) * 0.5).tocsr()
        csr.sum_duplicates()
        csr.sort_indices()
        _check_symmetric(csr, sym_tol)
        return cls(csr.shape[0], csr.indptr.copy(), csr.indices.copy(), csr.data.copy(), sym_tol)

    @classmethod
    def identity(cls, n: int, scale: float = 1.0):
        return cls.from_scipy(sp.identity(n, format="csr") * scale)

    @classmethod
    def diagonal_matrix(cls, diag):
        return cls.from_scipy(sp.diags(np.asarray(diag, dtype=float)).tocsr())

    # basic protocol -------------------------------------------------------

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    def to_scipy(self) -> sp.csr_matrix:
        """Return the backing CSR matrix (treat as read-only)."""
        return self._csr

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def diagonal(self) -> np.ndarray:
        return self._csr.diagonal()

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.n:
            raise DimensionMismatch(f"operand has {x.shape[0]} rows, matrix is {self.n}x{self.n}")
        return self._csr @ x

    def __matmul__(self, x):
        return self.matvec(x)

    def quadratic_form(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.matvec(x))

    def is_diagonal(self) -> bool:
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        return bool(np.all(self.indices == rows))

    def norm1(self) -> float:
        """Max absolute row sum (equals the 1-norm for symmetric storage)."""
        if self.nnz == 0:
            return 0.0
        return float(np.max(np.abs(self._csr).sum(axis=1)))

    def bandwidth(self) -> int:
        if self.nnz == 0:
            return 0
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        return int(np.max(np.abs(self.indices - rows)))

    # algebra ----------------------------------------------------------------

    def combine(self, other: "SparseSymMatrix", a: float = 1.0, b: float = 1.0):
        """Return ``a*self + b*other``."""
        if other.n != self.n:
            raise DimensionMismatch("matrix sizes differ")
        return SparseSymMatrix.from_scipy(a * self._csr + b * other._csr, sym_tol=self.sym_tol)

    def restrict(self, keep):
        """Principal submatrix on the index set ``keep`` (Dirichlet restriction)."""
        keep = np.asarray(keep)
        sub = self._csr[keep][:, keep]
        return SparseSymMatrix.from_scipy(sub, sym_tol=self.sym_tol)

    def to_banded_upper(self, shift: float = 0.0, other: "SparseSymMatrix" = None):
        """Upper banded storage of ``self - shift*other`` for LAPACK ``?pbtrf``.

        ``ab[kd + i - j, j] = A[i, j]`` for ``i <= j``.
        """
        mat = self._csr
        if other is not None and shift != 0.0:
            mat = mat - shift * other._csr
        coo = sp.triu(mat).tocoo()
        kd = int(np.max(coo.col - coo.row)) if coo.nnz else 0
        ab = np.zeros((kd + 1, self.n))
        np.add.at(ab, (kd + coo.row - coo.col, coo.col), coo.data)
        return ab


def _check_symmetric(csr: sp.csr_matrix, tol: float) -> None:
    diff = csr - csr.T
    if diff.nnz:
        worst = float(np.max(np.abs(diff.data))) if diff.data.size else 0.0
        if worst > tol:
            raise AsymmetricInput(f"matrix not symmetric: max |a_ij - a_ji| = {worst:.3e} > {tol:.1e}")
    # structural check: every stored (i,j) has a stored (j,i)
    pattern = csr.copy()
    pattern.data = np.ones_like(pattern.data)
    if (pattern != pattern.T).nnz:
        raise AsymmetricInput("sparsity pattern is not symmetric")


def assemble_from_triplets(triplets, n: int, sym_tol: float = DEFAULT_SYM_TOL) -> SparseSymMatrix:
    """Build a symmetric matrix from ``(row, col, value)`` triplets.

    Duplicate entries are summed. Both triangles must be supplied.

    >>> assemble_from_triplets([(0, 1, 1.0), (1, 0, 1.0)], 2).to_dense()
    array([[0., 1.],
           [1., 0.]])
    """
    if n <= 0:
        raise IndexOutOfRange(f"dimension must be positive, got {n}")
    trip = list(triplets)
    if trip:
        rows, cols, vals = (np.asarray(v) for v in zip(*trip))
    else:
        rows = cols = np.zeros(0, dtype=int)
        vals = np.zeros(0)
    rows = rows.astype(np.int64)
    cols = cols.astype(np.int64)
    if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
        raise IndexOutOfRange(f"triplet index outside [0, {n})")
    coo = sp.coo_matrix((vals.astype(float), (rows, cols)), shape=(n, n))
    return SparseSymMatrix.from_scipy(coo, sym_tol=sym_tol)

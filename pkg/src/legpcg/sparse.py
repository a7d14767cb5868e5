"""Row-compressed sparse matrices, ILU(0), and triangular substitutions.

The factorization overwrites a copy of the matrix in place (lower part by
the unit-lower factor, upper part by the upper factor) and updates only
positions inside the original sparsity pattern.  Hot loops are JIT
compiled with numba.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

__all__ = [
    "SparseMatrix",
    "IluFactors",
    "IluZeroPivotError",
    "spmv",
    "ilu0",
    "forward_sub",
    "backward_sub",
    "precond_apply",
    "save_matrix_market",
    "load_matrix_market",
]


class IluZeroPivotError(RuntimeError):
    """Raised when ILU(0) meets a (numerically) zero pivot."""

    def __init__(self, row):
        self.row = row
        super().__init__(f"zero pivot at elimination step {row}")


@dataclass(frozen=True)
class SparseMatrix:
    """CSR matrix with sorted, duplicate-free column indices per row."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray

    @classmethod
    def from_scipy(cls, mat):
        csr = mat.tocsr()
        csr.sort_indices()
        csr.sum_duplicates()
        return cls(csr.shape[0], csr.indptr.astype(np.int64),
                   csr.indices, csr.data.astype(float))

    @classmethod
    def from_dense(cls, dense, tol=0.0):
        import scipy.sparse as sp
        d = np.asarray(dense, dtype=float).copy()
        if tol > 0.0:
            d[np.abs(d) < tol] = 0.0
        return cls.from_scipy(sp.csr_matrix(d))

    def to_scipy(self):
        import scipy.sparse as sp
        return sp.csr_matrix((self.values, self.indices, self.indptr),
                             shape=(self.n, self.n))

    def to_dense(self):
        return self.to_scipy().toarray()

    @property
    def nnz(self):
        return int(self.indptr[-1])

    def validate(self):
        if self.indptr[0] != 0 or self.indptr[-1] != self.indices.size:
            raise ValueError("inconsistent row pointers")
        if np.any(np.diff(self.indptr) < 0):
            raise ValueError("row pointers must be nondecreasing")
        if self.indices.size and (self.indices.min() < 0
                                  or self.indices.max() >= self.n):
            raise ValueError("column index out of range")
        for i in range(self.n):
            cols = self.indices[self.indptr[i]:self.indptr[i + 1]]
            if np.any(np.diff(cols) <= 0):
                raise ValueError(f"row {i} has unsorted or duplicate columns")


@dataclass(frozen=True)
class IluFactors:
    """ILU(0) factors: L strictly lower (unit diagonal implicit), U upper."""

    L: SparseMatrix
    U: SparseMatrix


@njit(cache=True)
def _spmv_kernel(n, indptr, indices, values, x, y):
    for i in range(n):
        acc = 0.0
        for idx in range(indptr[i], indptr[i + 1]):
            acc += values[idx] * x[indices[idx]]
        y[i] = acc


def spmv(a, x):
    """y = A x for a SparseMatrix."""
    x = np.asarray(x, dtype=float)
    if x.shape != (a.n,):
        raise ValueError(f"vector length {x.shape} does not match n={a.n}")
    y = np.empty(a.n)
    _spmv_kernel(a.n, a.indptr, a.indices, a.values, x, y)
    return y


@njit(cache=True)
def _ilu0_kernel(n, indptr, indices, data, diag_ptr, pivot_tol):
    marker = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        row_start = indptr[i]
        row_end = indptr[i + 1]
        for idx in range(row_start, row_end):
            marker[indices[idx]] = idx
        for idx in range(row_start, row_end):
            k = indices[idx]
            if k >= i:
                break
            piv = data[diag_ptr[k]]
            if abs(piv) < pivot_tol:
                return k
            lik = data[idx] / piv
            data[idx] = lik
            for kidx in range(diag_ptr[k] + 1, indptr[k + 1]):
                pos = marker[indices[kidx]]
                if pos >= 0:
                    data[pos] -= lik * data[kidx]
        for idx in range(row_start, row_end):
            marker[indices[idx]] = -1
    return -1


def ilu0(m, pivot_tol=1e-300):
    """ILU(0) factorization restricted to the sparsity pattern of M."""
    if m.n == 0:
        raise ValueError("empty matrix")
    diag_ptr = np.empty(m.n, dtype=np.int64)
    for i in range(m.n):
        lo, hi = m.indptr[i], m.indptr[i + 1]
        pos = lo + np.searchsorted(m.indices[lo:hi], i)
        if pos >= hi or m.indices[pos] != i:
            raise IluZeroPivotError(i)
        diag_ptr[i] = pos
    data = m.values.copy()
    bad = _ilu0_kernel(m.n, m.indptr, m.indices, data, diag_ptr, pivot_tol)
    if bad >= 0:
        raise IluZeroPivotError(int(bad))
    if abs(data[diag_ptr[m.n - 1]]) < pivot_tol:
        raise IluZeroPivotError(m.n - 1)
    # split by triangle: L strictly lower, U upper including the diagonal
    lower_mask = np.zeros(m.indices.size, dtype=bool)
    for i in range(m.n):
        lower_mask[m.indptr[i]:diag_ptr[i]] = True
    counts_l = np.add.reduceat(lower_mask, m.indptr[:-1]) \
        if m.indices.size else np.zeros(m.n, dtype=int)
    counts_l = np.where(np.diff(m.indptr) > 0, counts_l, 0)
    indptr_l = np.concatenate([[0], np.cumsum(counts_l)]).astype(np.int64)
    indptr_u = m.indptr - indptr_l
    lmat = SparseMatrix(m.n, indptr_l, m.indices[lower_mask],
                        data[lower_mask])
    umat = SparseMatrix(m.n, indptr_u, m.indices[~lower_mask],
                        data[~lower_mask])
    return IluFactors(lmat, umat)


@njit(cache=True)
def _forward_kernel(n, indptr, indices, values, r, y):
    for i in range(n):
        acc = 0.0
        for idx in range(indptr[i], indptr[i + 1]):
            acc += values[idx] * y[indices[idx]]
        y[i] = r[i] - acc


@njit(cache=True)
def _backward_kernel(n, indptr, indices, values, y, z):
    for i in range(n - 1, -1, -1):
        acc = 0.0
        diag = 0.0
        for idx in range(indptr[i], indptr[i + 1]):
            j = indices[idx]
            if j == i:
                diag = values[idx]
            else:
                acc += values[idx] * z[j]
        z[i] = (y[i] - acc) / diag
    return 0


def forward_sub(f, r):
    """Solve L y = r with the unit lower triangular ILU factor."""
    r = np.asarray(r, dtype=float)
    if r.shape != (f.L.n,):
        raise ValueError("length mismatch in forward substitution")
    y = np.zeros(f.L.n)
    _forward_kernel(f.L.n, f.L.indptr, f.L.indices, f.L.values, r, y)
    return y


def backward_sub(f, y):
    """Solve U z = y with the upper triangular ILU factor."""
    y = np.asarray(y, dtype=float)
    if y.shape != (f.U.n,):
        raise ValueError("length mismatch in backward substitution")
    z = np.zeros(f.U.n)
    _backward_kernel(f.U.n, f.U.indptr, f.U.indices, f.U.values, y, z)
    return z


def precond_apply(f, r):
    """One-step approximate solve of M z = r via the two substitutions."""
    return backward_sub(f, forward_sub(f, r))


def save_matrix_market(path, a):
    """Dump a SparseMatrix in Matrix Market coordinate text format."""
    from scipy.io import mmwrite
    mmwrite(str(path), a.to_scipy())


def load_matrix_market(path):
    from scipy.io import mmread
    return SparseMatrix.from_scipy(mmread(str(path)))

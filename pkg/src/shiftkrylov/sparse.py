"""Real square CSR storage, sparse products and Matrix Market I/O."""
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sps

from .errors import DimensionError, MatrixMarketError

__all__ = [
    "CsrMatrix",
    "csr_matvec",
    "read_matrix_market",
    "write_matrix_market",
    "as_dense",
]


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Square real matrix in compressed sparse row form.

    Column indices are strictly increasing within each row. Instances are
    immutable; products go through a cached :mod:`scipy.sparse` view.
    """

    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray
    _sp: sps.csr_matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        row_ptr = np.ascontiguousarray(self.row_ptr, dtype=np.int64)
        col_idx = np.ascontiguousarray(self.col_idx, dtype=np.int64)
        values = np.ascontiguousarray(self.values, dtype=float)
        n = int(self.n)
        if row_ptr.shape != (n + 1,) or row_ptr[0] != 0:
            raise DimensionError("row_ptr must have length n+1 and start at 0")
        if np.any(np.diff(row_ptr) < 0):
            raise ValueError("row_ptr must be nondecreasing")
        if col_idx.shape != values.shape or row_ptr[-1] != col_idx.size:
            raise DimensionError("col_idx/values length must equal row_ptr[-1]")
        if col_idx.size and (col_idx.min() < 0 or col_idx.max() >= n):
            raise ValueError("column index out of range")
        inner = np.diff(col_idx)
        row_start = np.zeros(col_idx.size, dtype=bool)
        row_start[row_ptr[:-1][row_ptr[:-1] < col_idx.size]] = True
        if np.any((inner <= 0) & ~row_start[1:]):
            raise ValueError("column indices must be strictly increasing within each row")
        for name, arr in (("row_ptr", row_ptr), ("col_idx", col_idx), ("values", values)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "_sp", sps.csr_matrix((values, col_idx, row_ptr), shape=(n, n)))

    @classmethod
    def from_scipy(cls, M):
        M = sps.csr_matrix(M, dtype=float, copy=True)
        if M.shape[0] != M.shape[1]:
            raise DimensionError("CsrMatrix must be square")
        M.sum_duplicates()
        M.sort_indices()
        return cls(M.shape[0], M.indptr, M.indices, M.data)

    @classmethod
    def from_dense(cls, D):
        return cls.from_scipy(sps.csr_matrix(np.asarray(D, dtype=float)))

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def nnz(self):
        return int(self.values.size)

    @property
    def dtype(self):
        return self.values.dtype

    def to_scipy(self):
        return self._sp

    def toarray(self):
        return self._sp.toarray()

    def diagonal(self):
        return self._sp.diagonal()

    def norm_fro(self):
        return float(np.linalg.norm(self.values))

    def __matmul__(self, x):
        return csr_matvec(self, x)


def csr_matvec(A, x):
    """Product ``A @ x`` for a vector or an (n, k) block of vectors."""
    x = np.asarray(x)
    if x.shape[0] != A.n:
        raise DimensionError(f"csr_matvec: operand has {x.shape[0]} rows, matrix order is {A.n}")
    return A.to_scipy() @ x


def as_dense(A):
    """Dense ndarray copy of a CsrMatrix, scipy sparse matrix or ndarray."""
    if isinstance(A, CsrMatrix):
        return A.toarray()
    if sps.issparse(A):
        return A.toarray()
    return np.array(A)


def _parse_header(line):
    tokens = line.strip().lower().split()
    if len(tokens) != 5 or tokens[0] != "%%matrixmarket" or tokens[1] != "matrix":
        raise MatrixMarketError(f"malformed Matrix Market header: {line.strip()!r}")
    fmt, field_, symm = tokens[2:]
    if fmt != "coordinate":
        raise MatrixMarketError(f"only coordinate format is supported, got {fmt!r}")
    if field_ not in ("real", "integer", "double"):
        raise MatrixMarketError(f"only real/integer fields are supported, got {field_!r}")
    if symm not in ("general", "symmetric"):
        raise MatrixMarketError(f"only general/symmetric matrices are supported, got {symm!r}")
    return symm


def read_matrix_market(path):
    """Read a real coordinate Matrix Market file into a :class:`CsrMatrix`.

    Symmetric files are expanded to full storage.
    """
    path = Path(path)
    with path.open() as fh:
        symm = _parse_header(fh.readline())
        line = fh.readline()
        while line and (line.startswith("%") or not line.strip()):
            line = fh.readline()
        try:
            rows, cols, nnz = (int(t) for t in line.split())
        except ValueError as exc:
            raise MatrixMarketError(f"malformed size line: {line.strip()!r}") from exc
        body = [ln for ln in fh if ln.strip() and not ln.startswith("%")]
    if rows != cols:
        raise MatrixMarketError(f"matrix must be square, got {rows}x{cols}")
    if len(body) != nnz:
        raise MatrixMarketError(f"expected {nnz} entries, found {len(body)}")
    if nnz:
        try:
            data = np.array([ln.split()[:3] for ln in body], dtype=float)
        except ValueError as exc:
            raise MatrixMarketError("malformed entry line") from exc
        if data.shape[1] != 3:
            raise MatrixMarketError("entry lines need row, column and value")
        i = data[:, 0].astype(np.int64) - 1
        j = data[:, 1].astype(np.int64) - 1
        v = data[:, 2]
    else:
        i = j = np.zeros(0, dtype=np.int64)
        v = np.zeros(0)
    if nnz and (i.min() < 0 or j.min() < 0 or i.max() >= rows or j.max() >= rows):
        raise MatrixMarketError("entry index out of range")
    if symm == "symmetric":
        off = i != j
        i, j, v = np.concatenate([i, j[off]]), np.concatenate([j, i[off]]), np.concatenate([v, v[off]])
    return CsrMatrix.from_scipy(sps.coo_matrix((v, (i, j)), shape=(rows, rows)))


def write_matrix_market(A, path, comment=None):
    """Write ``A`` as a coordinate real general file, full double precision."""
    if not isinstance(A, CsrMatrix):
        A = CsrMatrix.from_scipy(A)
    rows = np.repeat(np.arange(A.n), np.diff(A.row_ptr))
    with Path(path).open("w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        if comment:
            for ln in str(comment).splitlines():
                fh.write(f"% {ln}\n")
        fh.write(f"{A.n} {A.n} {A.nnz}\n")
        for r, c, val in zip(rows, A.col_idx, A.values):
            fh.write(f"{r + 1} {c + 1} {float(val)!r}\n")

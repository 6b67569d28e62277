"""Matrix Market and plain vector files.

Sparse matrices use ``coordinate real general`` (1-based on disk), dense ones
``array real general`` (column-major on disk). Values are written with 17
significant digits so a round trip is exact.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.sparse as sp

from .linop import CSR, Dense, LinearOperator

COORD_HEADER = "%%MatrixMarket matrix coordinate real general"
ARRAY_HEADER = "%%MatrixMarket matrix array real general"
_FMT = "%.17g"


class ParseError(ValueError):
    def __init__(self, path, lineno: int, msg: str):
        self.path, self.lineno = path, lineno
        super().__init__(f"{path}:{lineno}: {msg}")


def _content_lines(path):
    """Yield (lineno, stripped line) skipping blanks and % comments after the header."""
    with open(path) as fh:
        for i, raw in enumerate(fh, start=1):
            line = raw.strip()
            if i > 1 and (not line or line.startswith("%")):
                continue
            yield i, line


def _float(path, lineno, tok):
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(path, lineno, f"cannot parse value {tok!r}") from None
    if not np.isfinite(v):
        raise ParseError(path, lineno, f"non-finite value {tok!r}")
    return v


def _int(path, lineno, tok):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(path, lineno, f"cannot parse integer {tok!r}") from None


def read_matrix(path: str | os.PathLike) -> LinearOperator:
    lines = _content_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise ParseError(path, 1, "empty file") from None
    tokens = header.lower().split()
    if len(tokens) != 5 or tokens[0] != "%%matrixmarket" or tokens[1] != "matrix":
        raise ParseError(path, lineno, f"bad header {header!r}")
    layout, field, symmetry = tokens[2:]
    if field not in ("real", "double", "integer") or symmetry != "general":
        raise ParseError(path, lineno, f"unsupported field/symmetry {field} {symmetry}")
    if layout not in ("coordinate", "array"):
        raise ParseError(path, lineno, f"unsupported layout {layout}")

    try:
        lineno, size = next(lines)
    except StopIteration:
        raise ParseError(path, lineno + 1, "missing size line") from None
    dims = [_int(path, lineno, t) for t in size.split()]

    if layout == "coordinate":
        if len(dims) != 3:
            raise ParseError(path, lineno, "size line must be 'rows cols nnz'")
        m, n, nnz = dims
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz)
        k = 0
        for lineno, line in lines:
            if k == nnz:
                raise ParseError(path, lineno, f"more than {nnz} entries")
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(path, lineno, "entry must be 'row col value'")
            i, j = _int(path, lineno, parts[0]), _int(path, lineno, parts[1])
            if not (1 <= i <= m and 1 <= j <= n):
                raise ParseError(path, lineno, f"index ({i}, {j}) outside {m}x{n}")
            rows[k], cols[k], vals[k] = i - 1, j - 1, _float(path, lineno, parts[2])
            k += 1
        if k != nnz:
            raise ParseError(path, lineno, f"expected {nnz} entries, found {k}")
        mat = sp.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsr()
        return CSR.from_scipy(mat)

    if len(dims) != 2:
        raise ParseError(path, lineno, "size line must be 'rows cols'")
    m, n = dims
    vals = []
    for lineno, line in lines:
        for tok in line.split():
            vals.append(_float(path, lineno, tok))
    if len(vals) != m * n:
        raise ParseError(path, lineno, f"expected {m * n} values, found {len(vals)}")
    return Dense(np.asarray(vals).reshape((n, m)).T)


def write_matrix(path: str | os.PathLike, a, comment: str | None = None) -> None:
    """Write a Dense (array) or CSR (coordinate) operator, or a raw ndarray."""
    if isinstance(a, CSR):
        coo = a.to_scipy().tocoo()
        with open(path, "w") as fh:
            fh.write(COORD_HEADER + "\n")
            if comment:
                fh.write(f"% {comment}\n")
            fh.write(f"{a.nrows} {a.ncols} {coo.nnz}\n")
            body = np.column_stack([coo.row + 1, coo.col + 1])
            for (i, j), v in zip(body, coo.data):
                fh.write(f"{i} {j} {_FMT % v}\n")
        return
    dense = a.to_dense() if isinstance(a, LinearOperator) else np.asarray(a, dtype=np.float64)
    m, n = dense.shape
    with open(path, "w") as fh:
        fh.write(ARRAY_HEADER + "\n")
        if comment:
            fh.write(f"% {comment}\n")
        fh.write(f"{m} {n}\n")
        np.savetxt(fh, dense.T.reshape(-1), fmt=_FMT)


def read_vector(path: str | os.PathLike) -> np.ndarray:
    vals = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            parts = line.split()
            if len(parts) != 1:
                raise ParseError(path, lineno, "expected one value per line")
            vals.append(_float(path, lineno, parts[0]))
    return np.asarray(vals)


def write_vector(path: str | os.PathLike, v, comment: str | None = None) -> None:
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    with open(path, "w") as fh:
        if comment:
            fh.write(f"% {comment}\n")
        np.savetxt(fh, v, fmt=_FMT)

"""Real linear operators touched only through ``A @ x`` and ``A.T @ u``.

Every kind supports both products on a single vector or on a block of
column vectors (2-D array with one vector per column). Operators are
immutable after construction; blocked kernels split the rows into a fixed
layout and hand the blocks to the worker pool, so the result never depends
on the worker count.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.sparse as sp

from ._parallel import pmap, row_blocks

# Rows per kernel block. Fixed so results do not depend on the worker count.
ROW_BLOCK = 4096


class DimensionError(ValueError):
    pass


def _as_input(v, expected: int, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim not in (1, 2):
        raise DimensionError(f"{what} must be a vector or a block of column vectors, got ndim={v.ndim}")
    if v.shape[0] != expected:
        raise DimensionError(f"{what} has length {v.shape[0]}, expected {expected}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{what} contains non-finite values")
    return v


class LinearOperator:
    """Abstract m-by-n real linear map."""

    kind = "abstract"

    def __init__(self, nrows: int, ncols: int):
        if nrows < 0 or ncols < 0:
            raise DimensionError(f"negative dimensions ({nrows}, {ncols})")
        self.nrows = int(nrows)
        self.ncols = int(ncols)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    def apply(self, x) -> np.ndarray:
        """Return ``A @ x``; ``x`` has ``ncols`` rows."""
        x = _as_input(x, self.ncols, "input to apply")
        return self._apply(x)

    def apply_adjoint(self, u) -> np.ndarray:
        """Return ``A.T @ u``; ``u`` has ``nrows`` rows."""
        u = _as_input(u, self.nrows, "input to apply_adjoint")
        return self._apply_adjoint(u)

    def _apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _apply_adjoint(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dense(self) -> np.ndarray:
        return self._apply(np.eye(self.ncols))

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.nrows}x{self.ncols}>"


def _out(nrows: int, x: np.ndarray) -> np.ndarray:
    return np.empty((nrows,) + x.shape[1:])


class Dense(LinearOperator):
    kind = "dense"

    def __init__(self, values):
        a = np.ascontiguousarray(values, dtype=np.float64)
        if a.ndim != 2:
            raise DimensionError(f"dense operator needs a 2-D array, got ndim={a.ndim}")
        super().__init__(*a.shape)
        a.setflags(write=False)
        self.values = a
        self._blocks = row_blocks(self.nrows, ROW_BLOCK)

    def _apply(self, x):
        if len(self._blocks) <= 1:
            return self.values @ x
        out = _out(self.nrows, x)

        def work(blk):
            lo, hi = blk
            out[lo:hi] = self.values[lo:hi] @ x

        pmap(work, self._blocks)
        return out

    def _apply_adjoint(self, u):
        if len(self._blocks) <= 1:
            return self.values.T @ u
        parts = pmap(lambda blk: self.values[blk[0]:blk[1]].T @ u[blk[0]:blk[1]], self._blocks)
        # fixed-order reduction
        acc = parts[0].copy()
        for p in parts[1:]:
            acc += p
        return acc

    def to_dense(self):
        return np.array(self.values)


class CSR(LinearOperator):
    """Compressed sparse rows. ``A.T @ u`` walks the same arrays transposed."""

    kind = "csr"

    def __init__(self, indptr, indices, data, shape: tuple[int, int]):
        indptr = np.asarray(indptr, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        data = np.asarray(data, dtype=np.float64)
        m, n = shape
        super().__init__(m, n)
        if indptr.shape != (m + 1,):
            raise DimensionError(f"row-pointer length {indptr.shape[0]}, expected {m + 1}")
        if indptr[0] != 0 or np.any(np.diff(indptr) < 0):
            raise ValueError("row pointers must start at 0 and be nondecreasing")
        if indptr[-1] != len(indices) or len(indices) != len(data):
            raise ValueError(
                f"final row pointer {indptr[-1]} must equal nnz "
                f"(indices: {len(indices)}, values: {len(data)})"
            )
        if len(indices) and (indices.min() < 0 or indices.max() >= n):
            raise ValueError(f"column indices must lie in [0, {n})")
        for arr in (indptr, indices, data):
            arr.setflags(write=False)
        self.indptr, self.indices, self.data = indptr, indices, data
        self._blocks = row_blocks(m, ROW_BLOCK)
        self._mats = [
            sp.csr_matrix(
                (data[indptr[lo]:indptr[hi]], indices[indptr[lo]:indptr[hi]], indptr[lo:hi + 1] - indptr[lo]),
                shape=(hi - lo, n),
            )
            for lo, hi in self._blocks
        ]

    @classmethod
    def from_scipy(cls, mat) -> "CSR":
        mat = sp.csr_matrix(mat)
        mat.sort_indices()
        return cls(mat.indptr, mat.indices, mat.data, mat.shape)

    @classmethod
    def from_dense(cls, a) -> "CSR":
        return cls.from_scipy(sp.csr_matrix(np.asarray(a, dtype=np.float64)))

    @property
    def nnz(self) -> int:
        return len(self.data)

    def _apply(self, x):
        if not self._mats:
            return np.zeros((0,) + x.shape[1:])
        if len(self._mats) == 1:
            return np.asarray(self._mats[0] @ x)
        out = _out(self.nrows, x)

        def work(i):
            lo, hi = self._blocks[i]
            out[lo:hi] = self._mats[i] @ x

        pmap(work, range(len(self._mats)))
        return out

    def _apply_adjoint(self, u):
        if not self._mats:
            return np.zeros((self.ncols,) + u.shape[1:])
        parts = pmap(
            lambda i: np.asarray(self._mats[i].T @ u[self._blocks[i][0]:self._blocks[i][1]]),
            range(len(self._mats)),
        )
        acc = parts[0].copy()
        for p in parts[1:]:
            acc += p
        return acc

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=self.shape)

    def to_dense(self):
        return self.to_scipy().toarray()


class VStack(LinearOperator):
    """``[A1; A2; ...]``"""

    kind = "vstack"

    def __init__(self, children: Sequence[LinearOperator]):
        children = [aslinop(c) for c in children]
        if not children:
            raise DimensionError("vstack needs at least one operator")
        n = children[0].ncols
        if any(c.ncols != n for c in children):
            raise DimensionError(f"vstack children disagree on ncols: {[c.ncols for c in children]}")
        super().__init__(sum(c.nrows for c in children), n)
        self.children = tuple(children)
        self.offsets = np.cumsum([0] + [c.nrows for c in children])

    def _apply(self, x):
        return np.concatenate([c._apply(x) for c in self.children], axis=0)

    def _apply_adjoint(self, u):
        o = self.offsets
        acc = self.children[0]._apply_adjoint(u[o[0]:o[1]])
        for i, c in enumerate(self.children[1:], start=1):
            acc = acc + c._apply_adjoint(u[o[i]:o[i + 1]])
        return acc


class HCat(LinearOperator):
    """``[A1, A2, ...]``"""

    kind = "hcat"

    def __init__(self, children: Sequence[LinearOperator]):
        children = [aslinop(c) for c in children]
        if not children:
            raise DimensionError("hcat needs at least one operator")
        m = children[0].nrows
        if any(c.nrows != m for c in children):
            raise DimensionError(f"hcat children disagree on nrows: {[c.nrows for c in children]}")
        super().__init__(m, sum(c.ncols for c in children))
        self.children = tuple(children)
        self.offsets = np.cumsum([0] + [c.ncols for c in children])

    def _apply(self, x):
        o = self.offsets
        acc = self.children[0]._apply(x[o[0]:o[1]])
        for i, c in enumerate(self.children[1:], start=1):
            acc = acc + c._apply(x[o[i]:o[i + 1]])
        return acc

    def _apply_adjoint(self, u):
        return np.concatenate([c._apply_adjoint(u) for c in self.children], axis=0)


def _scale_rows(v: np.ndarray, d: np.ndarray) -> np.ndarray:
    return v * d if v.ndim == 1 else v * d[:, None]


class ColScaled(LinearOperator):
    """``A @ diag(scale)``"""

    kind = "col-scaled"

    def __init__(self, inner: LinearOperator, scale):
        inner = aslinop(inner)
        scale = np.asarray(scale, dtype=np.float64)
        if scale.shape != (inner.ncols,):
            raise DimensionError(f"scale has shape {scale.shape}, expected ({inner.ncols},)")
        super().__init__(inner.nrows, inner.ncols)
        scale.setflags(write=False)
        self.inner, self.scale = inner, scale

    def _apply(self, x):
        return self.inner._apply(_scale_rows(x, self.scale))

    def _apply_adjoint(self, u):
        return _scale_rows(self.inner._apply_adjoint(u), self.scale)


class PrecondComposed(LinearOperator):
    """``A @ N`` (side="right") or ``N.T @ A`` (side="left") with a dense factor N."""

    kind = "precond-composed"

    def __init__(self, inner: LinearOperator, factor, side: str = "right"):
        inner = aslinop(inner)
        f = np.ascontiguousarray(factor, dtype=np.float64)
        if f.ndim != 2:
            raise DimensionError("factor must be 2-D")
        if side == "right":
            if f.shape[0] != inner.ncols:
                raise DimensionError(f"factor has {f.shape[0]} rows, expected {inner.ncols}")
            super().__init__(inner.nrows, f.shape[1])
        elif side == "left":
            if f.shape[0] != inner.nrows:
                raise DimensionError(f"factor has {f.shape[0]} rows, expected {inner.nrows}")
            super().__init__(f.shape[1], inner.ncols)
        else:
            raise ValueError(f"side must be 'right' or 'left', got {side!r}")
        f.setflags(write=False)
        self.inner, self.factor, self.side = inner, f, side

    def _apply(self, x):
        if self.side == "right":
            return self.inner._apply(self.factor @ x)
        return self.factor.T @ self.inner._apply(x)

    def _apply_adjoint(self, u):
        if self.side == "right":
            return self.factor.T @ self.inner._apply_adjoint(u)
        return self.inner._apply_adjoint(self.factor @ u)


class Adjoint(LinearOperator):
    """The transpose of another operator, without copying it."""

    kind = "adjoint"

    def __init__(self, inner: LinearOperator):
        inner = aslinop(inner)
        super().__init__(inner.ncols, inner.nrows)
        self.inner = inner

    def _apply(self, x):
        return self.inner._apply_adjoint(x)

    def _apply_adjoint(self, u):
        return self.inner._apply(u)


def identity(n: int) -> CSR:
    return CSR(np.arange(n + 1), np.arange(n), np.ones(n), (n, n))


def aslinop(a) -> LinearOperator:
    """Wrap ndarrays and scipy sparse matrices; pass operators through."""
    if isinstance(a, LinearOperator):
        return a
    if sp.issparse(a):
        return CSR.from_scipy(a)
    return Dense(a)

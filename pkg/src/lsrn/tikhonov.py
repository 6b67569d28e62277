"""Ridge regression ``min 1/2 ||A x - b||^2 + 1/2 ||W x||^2`` through the least-squares solver.

Tall A: solve the stacked problem ``min ||[A; W] x - [b; 0]||``.
Wide A: substitute ``z = W x`` and take the min-length solution of
``[A W^-1, I_m] [z; r] = b``; then ``x = W^-1 z``.

The penalty carries no extra factor, so a scalar ``lam`` means ``W = lam * I``
and the normal equations read ``(A^T A + lam^2 I) x = A^T b``.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from .gauss import GaussianSource
from .linop import (
    CSR,
    ColScaled,
    DimensionError,
    HCat,
    LinearOperator,
    PrecondComposed,
    VStack,
    aslinop,
    identity,
)
from .sketch import SketchResult, _Clock, _left, sample_count
from .solver import SolveOptions, SolveReport, _check_shape, solve, solve_with_sketch


@dataclass(frozen=True)
class RidgeSpec:
    """Regularizer W given as a scalar, a diagonal (1-D array) or a square operator.

    A general operator is accepted on the wide path only with ``allow_general``;
    its inverse is then formed densely.
    """

    W: object
    allow_general: bool = False

    def diagonal(self, n: int) -> np.ndarray | None:
        w = self.W
        if np.isscalar(w):
            return np.full(n, float(w))
        if isinstance(w, np.ndarray) and w.ndim == 1:
            if w.shape != (n,):
                raise DimensionError(f"diagonal regularizer has length {w.shape[0]}, expected {n}")
            return np.asarray(w, dtype=np.float64)
        return None

    def operator(self, n: int) -> LinearOperator:
        d = self.diagonal(n)
        if d is not None:
            return CSR(np.arange(n + 1), np.arange(n), d, (n, n))
        op = aslinop(self.W)
        if op.shape != (n, n):
            raise DimensionError(f"regularizer has shape {op.shape}, expected ({n}, {n})")
        return op


def _opts(opts: SolveOptions | None, overrides: dict) -> SolveOptions:
    opts = opts or SolveOptions()
    return SolveOptions(**{**asdict(opts), **overrides}) if overrides else opts


def _finish(rep: SolveReport, x: np.ndarray, A: LinearOperator, b: np.ndarray) -> SolveReport:
    res = b - A.apply(x)
    rep.x = x
    rep.shape = A.shape
    rep.residual_norm = float(np.linalg.norm(res))
    rep.normal_residual_norm = float(np.linalg.norm(A.apply_adjoint(res)))
    return rep


def _tall(A, b, W: LinearOperator):
    n = A.ncols
    stacked = VStack([A, W])
    rhs = np.concatenate([b, np.zeros(n)])
    return stacked, rhs


def solve_ridge(A, b, spec, opts: SolveOptions | None = None, **overrides) -> SolveReport:
    """Ridge solution for regularizer ``spec`` (a RidgeSpec or anything RidgeSpec accepts).

    The returned report describes the augmented solve; ``x``, ``shape`` and the
    residual norms refer to the original A and b.
    """
    if not isinstance(spec, RidgeSpec):
        spec = RidgeSpec(spec)
    opts = _opts(opts, overrides)
    A = aslinop(A)
    b = np.asarray(b, dtype=np.float64)
    m, n = A.shape
    if b.shape != (m,):
        raise DimensionError(f"right-hand side has length {b.shape[0] if b.ndim else 0}, expected {m}")

    if m >= n:
        stacked, rhs = _tall(A, b, spec.operator(n))
        rep = solve(stacked, rhs, opts)
        return _finish(rep, rep.x, A, b)

    d = spec.diagonal(n)
    if d is not None:
        if np.any(d == 0):
            raise ValueError("regularizer is singular; the wide reduction needs an invertible W")
        scaled = ColScaled(A, 1.0 / d)
        undo = lambda z: z / d  # noqa: E731
    else:
        if not spec.allow_general:
            raise ValueError("wide ridge with a non-diagonal W needs allow_general=True")
        w = spec.operator(n).to_dense()
        try:
            winv = np.linalg.inv(w)
        except np.linalg.LinAlgError as exc:
            raise ValueError("regularizer is singular; the wide reduction needs an invertible W") from exc
        if not np.all(np.isfinite(winv)) or np.linalg.cond(w) > 1 / np.finfo(float).eps:
            raise ValueError("regularizer is singular; the wide reduction needs an invertible W")
        scaled = PrecondComposed(A, winv, "right")
        undo = lambda z: winv @ z  # noqa: E731
    rep = solve(HCat([scaled, identity(m)]), b, opts)
    return _finish(rep, undo(rep.x[:n]), A, b)


def solve_ridge_path(A, b, lambdas, opts: SolveOptions | None = None, **overrides) -> list[SolveReport]:
    """Ridge solutions for ``W = lam * I`` over several ``lam``, sketching A once.

    Tall A only. The sketch of ``[A; lam I]`` splits as ``G_A A + G_W (lam I)``;
    ``G_A A`` is cached and only the second term is redrawn, with the same
    keys a single solve would use, so each result equals ``solve_ridge``.
    """
    opts = _opts(opts, overrides)
    A = aslinop(A)
    b = np.asarray(b, dtype=np.float64)
    m, n = A.shape
    if m < n:
        raise ValueError("sketch reuse is only available for tall A; solve each lambda separately")
    if b.shape != (m,):
        raise DimensionError(f"right-hand side has length {b.shape[0] if b.ndim else 0}, expected {m}")
    s = sample_count(opts.gamma, n)
    source = GaussianSource(opts.seed, opts.block_rows)
    clock = _Clock()
    t0 = time.perf_counter()
    cached = _left(A, s, source.child(0), clock)
    shared = time.perf_counter() - t0

    reports = []
    for lam in lambdas:
        t_start = time.perf_counter()
        W = RidgeSpec(float(lam)).operator(n)
        stacked, rhs = _tall(A, b, W)
        _check_shape(stacked, rhs)
        part = _Clock()
        t1 = time.perf_counter()
        a_tilde = cached + _left(W, s, source.child(1), part)
        wall = time.perf_counter() - t1
        busy = part.randn + part.mult
        frac = part.randn / busy if busy > 0 else 0.5
        sk = SketchResult(a_tilde, s, "left", opts.seed, wall * frac, wall * (1 - frac), wall)
        rep = solve_with_sketch(stacked, rhs, sk, opts, t_start)
        rep.timings["shared_sketch"] = shared
        reports.append(_finish(rep, rep.x, A, b))
    return reports


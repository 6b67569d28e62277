"""Gaussian sketch ``G @ A`` (left) or ``A @ G`` (right) without materializing G.

G is streamed in row blocks from a GaussianSource; each block is multiplied
through ``apply_adjoint`` (left) or ``apply`` (right) and dropped. For the
right side the n-by-s matrix G is the transpose of an s-by-n fill, so its
column blocks are the source's row blocks.

Stacked operators are sketched child by child with independent sub-sources:
``[G_1, G_2] @ [A; W] = G_1 @ A + G_2 @ W``. This is still a Gaussian sketch of
the stacked matrix, and it lets a caller reuse ``G_1 @ A`` across many ``W``.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from ._parallel import pmap
from .gauss import GaussianSource
from .linop import HCat, LinearOperator, VStack

DEFAULT_MAX_BYTES = 4 * 2**30


@dataclass
class SketchResult:
    a_tilde: np.ndarray  # s x n (left) or m x s (right)
    s: int
    side: str
    seed: int
    randn_time: float
    mult_time: float
    elapsed: float


def sample_count(gamma: float, k: int) -> int:
    """s = ceil(gamma * k)."""
    if not gamma > 1:
        raise ValueError(f"oversampling factor must exceed 1, got {gamma}")
    # round off representation noise like 1.4 * 500 = 700.0000000000001
    return int(math.ceil(round(gamma * k, 9)))


class _Clock:
    def __init__(self):
        self.randn = 0.0
        self.mult = 0.0


def _left(A: LinearOperator, s: int, source: GaussianSource, clock: _Clock) -> np.ndarray:
    if isinstance(A, VStack):
        acc = _left(A.children[0], s, source.child(0), clock)
        for i, c in enumerate(A.children[1:], start=1):
            acc += _left(c, s, source.child(i), clock)
        return acc
    out = np.empty((s, A.ncols))
    bs = source.block_rows

    def work(blk):
        lo, hi = blk
        t0 = time.perf_counter()
        g = source.block(lo // bs, hi - lo, A.nrows)
        t1 = time.perf_counter()
        out[lo:hi] = A.apply_adjoint(g.T).T
        t2 = time.perf_counter()
        return t1 - t0, t2 - t1

    for tr, tm in pmap(work, source.blocks(s)):
        clock.randn += tr
        clock.mult += tm
    return out


def _right(A: LinearOperator, s: int, source: GaussianSource, clock: _Clock) -> np.ndarray:
    if isinstance(A, HCat):
        acc = _right(A.children[0], s, source.child(0), clock)
        for i, c in enumerate(A.children[1:], start=1):
            acc += _right(c, s, source.child(i), clock)
        return acc
    out = np.empty((A.nrows, s))
    bs = source.block_rows

    def work(blk):
        lo, hi = blk
        t0 = time.perf_counter()
        g = source.block(lo // bs, hi - lo, A.ncols)
        t1 = time.perf_counter()
        out[:, lo:hi] = A.apply(g.T)
        t2 = time.perf_counter()
        return t1 - t0, t2 - t1

    for tr, tm in pmap(work, source.blocks(s)):
        clock.randn += tr
        clock.mult += tm
    return out


def sketch(
    A: LinearOperator,
    gamma: float,
    side: str,
    source: GaussianSource,
    max_bytes: int = DEFAULT_MAX_BYTES,
) -> SketchResult:
    m, n = A.shape
    k = min(m, n)
    s = sample_count(gamma, k)
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    width = n if side == "left" else m
    if s * width * 8 > max_bytes:
        raise MemoryError(f"sketch of size {s}x{width} exceeds the memory budget of {max_bytes} bytes")
    long_dim = m if side == "left" else n
    if s > long_dim:
        warnings.warn(
            f"sketch size s={s} exceeds the long dimension {long_dim}; "
            "the problem is not strongly rectangular",
            stacklevel=2,
        )

    clock = _Clock()
    t0 = time.perf_counter()
    if side == "left":
        a_tilde = _left(A, s, source, clock)
    else:
        a_tilde = _right(A, s, source, clock)
    wall = time.perf_counter() - t0

    # Apportion wall time by the measured per-block split (exact with one worker).
    busy = clock.randn + clock.mult
    frac = clock.randn / busy if busy > 0 else 0.5
    return SketchResult(a_tilde, s, side, source.seed, wall * frac, wall * (1 - frac), wall)

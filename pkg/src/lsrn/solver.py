"""Min-length least squares for strongly rectangular systems via a Gaussian-sketch preconditioner.

Tall (m >= n): sketch ``G @ A``, take ``N = V S^{-1}`` from its SVD, solve
``min_y ||A N y - b||`` iteratively and return ``x = N y``.
Wide (m < n): sketch ``A @ G``, take ``M = U S^{-1}``, solve
``min_x ||M^T A x - M^T b||`` iteratively.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .gauss import DEFAULT_BLOCK_ROWS, GaussianSource
from .krylov import IterationStats, chebyshev, lsqr
from .linop import Adjoint, LinearOperator, PrecondComposed, aslinop
from .precond import (
    Preconditioner,
    SigmaBounds,
    default_alpha,
    factor_sketch,
    kappa_bound,
    sigma_bounds,
)
from .sketch import DEFAULT_MAX_BYTES, SketchResult, sketch

log = logging.getLogger(__name__)


@dataclass
class SolveOptions:
    gamma: float = 2.0
    eps: float = 1e-14
    delta: float = 0.01
    alpha: float | None = None  # overrides delta
    solver: str = "lsqr"
    seed: int = 0
    rank_tol: float | None = None
    max_iter: int | None = None
    record_history: bool = False
    refine: int = 1  # correction sweeps dx = pinv(A) (b - A x)
    block_rows: int = DEFAULT_BLOCK_ROWS
    cs_check_every: int | None = None
    max_sketch_bytes: int = DEFAULT_MAX_BYTES

    def __post_init__(self):
        if not self.gamma > 1:
            raise ValueError(f"oversampling factor must exceed 1, got {self.gamma}")
        if not 0 < self.eps < 1:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.refine < 0:
            raise ValueError(f"refine must be >= 0, got {self.refine}")
        if self.solver not in ("lsqr", "cs"):
            raise ValueError(f"solver must be 'lsqr' or 'cs', got {self.solver!r}")


@dataclass
class SolveReport:
    x: np.ndarray
    shape: tuple[int, int]
    orientation: str
    detected_rank: int
    s: int
    sigma_bounds: SigmaBounds
    iteration_bound: int
    iteration_stats: IterationStats
    refinement_stats: list[IterationStats]
    residual_norm: float
    normal_residual_norm: float
    options: SolveOptions
    timings: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return self.iteration_stats.iterations

    @property
    def converged(self) -> bool:
        return self.iteration_stats.converged

    def to_dict(self, include_x: bool = False) -> dict:
        """JSON-ready summary (see README for the schema)."""
        sb = self.sigma_bounds
        stats = self.iteration_stats
        out = {
            "orientation": self.orientation,
            "m": int(self.shape[0]),
            "n": int(self.shape[1]),
            "seed": int(self.options.seed),
            "gamma": float(self.options.gamma),
            "eps": float(self.options.eps),
            "delta": float(self.options.delta),
            "alpha": float(sb.alpha),
            "solver": self.options.solver,
            "s": int(self.s),
            "detected_rank": int(self.detected_rank),
            "sigma_lower": float(sb.sigma_lower),
            "sigma_upper": float(sb.sigma_upper),
            "failure_prob": float(sb.failure_prob),
            "kappa_bound": float(sb.kappa_bound),
            "kappa_estimate_alpha0": float(kappa_bound(sb.s, sb.r, 0.0)),
            "iteration_bound": int(self.iteration_bound),
            "iterations": int(stats.iterations),
            "refinement_iterations": [int(st.iterations) for st in self.refinement_stats],
            "converged": bool(stats.converged),
            "stop_reason": stats.stop_reason,
            "residual_norm": float(self.residual_norm),
            "normal_residual_norm": float(self.normal_residual_norm),
            "timings": {k: float(v) for k, v in self.timings.items()},
        }
        if stats.history:
            out["history"] = [float(h) for h in stats.history]
        if include_x:
            out["x"] = [float(v) for v in self.x]
        return out


def iteration_bound(eps: float, r: int, s: int, alpha: float = 0.0) -> int:
    """ceil((ln eps - ln 2) / ln(alpha + sqrt(r/s))), the CG-type iteration bound (0 if eps >= 2)."""
    rate = alpha + math.sqrt(r / s)
    if rate >= 1:
        raise ValueError(f"oversampling too small for requested alpha (alpha + sqrt(r/s) = {rate:.4g} >= 1)")
    if rate <= 0:
        raise ValueError(f"rate must be positive, got {rate}")
    num = math.log(eps) - math.log(2)
    if num >= 0:
        return 0
    return math.ceil(num / math.log(rate))


@dataclass
class _Prepared:
    sk: SketchResult
    P: Preconditioner
    bounds: SigmaBounds
    nbound: int
    svd_time: float


def _prepare(sk: SketchResult, opts: SolveOptions) -> _Prepared:
    t0 = time.perf_counter()
    P = factor_sketch(sk, opts.rank_tol)
    svd_time = time.perf_counter() - t0
    alpha = opts.alpha if opts.alpha is not None else default_alpha(sk.s, P.rank, opts.delta)
    bounds = sigma_bounds(sk.s, P.rank, alpha)
    return _Prepared(sk, P, bounds, iteration_bound(opts.eps, P.rank, sk.s, alpha), svd_time)


def _check_shape(A: LinearOperator, b: np.ndarray) -> None:
    m, n = A.shape
    if b.shape != (m,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({m},)")
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side contains non-finite values")
    if m == 0 or n == 0:
        raise ValueError(f"empty operator {m}x{n}")
    if 0.5 <= m / n <= 2:
        warnings.warn(
            f"{m}x{n} is not strongly rectangular; the sketch costs about as much as a direct solve",
            stacklevel=3,
        )


def orientation_of(A: LinearOperator) -> str:
    return "tall" if A.nrows >= A.ncols else "wide"


def sketch_for(A: LinearOperator, opts: SolveOptions) -> SketchResult:
    side = "left" if orientation_of(A) == "tall" else "right"
    return sketch(A, opts.gamma, side, GaussianSource(opts.seed, opts.block_rows), opts.max_sketch_bytes)


def solve_with_sketch(A, b, sk: SketchResult, opts: SolveOptions, t_start: float | None = None) -> SolveReport:
    """Finish a solve from an existing sketch of A (used for sketch reuse)."""
    A = aslinop(A)
    b = np.asarray(b, dtype=np.float64)
    if t_start is None:
        t_start = time.perf_counter()
    prep = _prepare(sk, opts)
    P = prep.P
    max_iter = opts.max_iter if opts.max_iter is not None else max(2 * prep.nbound, 10)

    t0 = time.perf_counter()
    side = "right" if P.side == "tall" else "left"
    op = PrecondComposed(A, P.factor, side)

    def inner(o, rhs):
        if opts.solver == "lsqr":
            return lsqr(o, rhs, opts.eps, max_iter, opts.record_history)
        return chebyshev(o, rhs, prep.bounds, opts.eps, opts.cs_check_every, opts.record_history)

    if P.side == "tall":
        y, stats = inner(op, b)
        x = P.factor @ y
    else:
        x, stats = inner(op, P.factor.T @ b)

    # Each sweep adds dx = pinv(A) (b - A x). Applying A to N @ v loses about
    # kappa(A) * eps, which the tall sweep recovers on the fresh residual. For
    # wide A, range(M) matches range(A) only to about kappa(A) * eps, so the
    # part of b outside range(A) would leak through M.T; the wide sweep instead
    # goes through the normal equations, pinv(A.T A) = pinv(B) S^-2 pinv(B.T)
    # with B = M.T A, and never feeds that part to the iteration.
    refinement = []
    sig2 = P.sketch_singular_values[: P.rank] ** 2
    for _ in range(opts.refine):
        res = b - A.apply(x)
        if P.side == "tall":
            dy, st = inner(op, res)
            dx = P.factor @ dy
        else:
            w, st1 = inner(Adjoint(op), A.apply_adjoint(res))
            dx, st = inner(op, w / sig2)
            st.iterations += st1.iterations
        refinement.append(st)
        x = x + dx
    iter_time = time.perf_counter() - t0
    total = time.perf_counter() - t_start

    res = b - A.apply(x)
    report = SolveReport(
        x=x,
        shape=A.shape,
        orientation=P.side,
        detected_rank=P.rank,
        s=sk.s,
        sigma_bounds=prep.bounds,
        iteration_bound=prep.nbound,
        iteration_stats=stats,
        refinement_stats=refinement,
        residual_norm=float(np.linalg.norm(res)),
        normal_residual_norm=float(np.linalg.norm(A.apply_adjoint(res))),
        options=opts,
        timings={
            "randn": sk.randn_time,
            "mult": sk.mult_time,
            "svd": prep.svd_time,
            "iter": iter_time,
            "total": total,
        },
    )
    if not stats.converged:
        log.warning("%s stopped after %d iterations without converging", opts.solver, stats.iterations)
    return report


def solve(A, b, opts: SolveOptions | None = None, **overrides) -> SolveReport:
    """Min-length solution of ``min ||A x - b||`` for strongly rectangular A."""
    opts = opts or SolveOptions()
    if overrides:
        opts = SolveOptions(**{**asdict(opts), **overrides})
    A = aslinop(A)
    b = np.asarray(b, dtype=np.float64)
    _check_shape(A, b)
    t_start = time.perf_counter()
    sk = sketch_for(A, opts)
    return solve_with_sketch(A, b, sk, opts, t_start)

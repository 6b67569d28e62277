"""Preconditioner from the economy SVD of a sketch, plus singular-value bounds.

For a left sketch ``G @ A = U S V^T`` the right preconditioner is
``N = V_r S_r^{-1}``; for a right sketch ``A @ G = U S V^T`` the left
preconditioner is ``M = U_r S_r^{-1}``. Either way the preconditioned operator
has singular values equal to those of ``(G U_A)^+``, which concentrate in

    [1 / ((1 + alpha) sqrt(s) + sqrt(r)),  1 / ((1 - alpha) sqrt(s) - sqrt(r))]

with failure probability at most ``2 exp(-alpha^2 s / 2)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .sketch import SketchResult

log = logging.getLogger(__name__)

EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class Preconditioner:
    factor: np.ndarray  # n x r (tall) or m x r (wide)
    rank: int
    sketch_singular_values: np.ndarray
    side: str  # "tall" -> A @ N, "wide" -> M.T @ A
    s: int


def _svd(a: np.ndarray):
    try:
        return scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesdd", check_finite=False)
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesvd", check_finite=False)


def _sketch_svd(a: np.ndarray, side: str):
    """Singular values and the needed factor of the sketch.

    The long dimension is first reduced by a QR whose Q is discarded, so the
    cost grows linearly in s and the SVD itself is min-by-min.
    """
    k = min(a.shape)
    if side == "left":
        r = scipy.linalg.qr(a, mode="r", check_finite=False)[0][:k]
        _, sig, vt = _svd(r)
        return sig, vt.T
    r = scipy.linalg.qr(a.T, mode="r", check_finite=False)[0][:k]
    u, sig, _ = _svd(r.T)
    return sig, u


def default_rank_tol(sk: SketchResult) -> float:
    return min(sk.a_tilde.shape) * EPS


def factor_sketch(sk: SketchResult, rank_tol: float | None = None) -> Preconditioner:
    a = sk.a_tilde
    if not np.all(np.isfinite(a)):
        raise ValueError("sketch contains non-finite values")
    if rank_tol is None:
        rank_tol = default_rank_tol(sk)
    try:
        sig, basis = _sketch_svd(a, sk.side)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"SVD of the {a.shape[0]}x{a.shape[1]} sketch failed: {exc}") from exc
    if sig.size == 0 or sig[0] == 0.0:
        raise ValueError("sketch has numerical rank 0")
    r = int(np.count_nonzero(sig > rank_tol * sig[0]))
    if r == 0:
        raise ValueError("sketch has numerical rank 0")
    factor = np.ascontiguousarray(basis[:, :r] / sig[:r])
    side = "tall" if sk.side == "left" else "wide"
    factor.setflags(write=False)
    sig.setflags(write=False)
    return Preconditioner(factor, r, sig, side, sk.s)


@dataclass(frozen=True)
class SigmaBounds:
    sigma_lower: float
    sigma_upper: float
    alpha: float
    failure_prob: float
    s: int
    r: int

    @property
    def rate(self) -> float:
        """(sigma_U - sigma_L) / (sigma_U + sigma_L), which equals alpha + sqrt(r/s)."""
        return (self.sigma_upper - self.sigma_lower) / (self.sigma_upper + self.sigma_lower)

    @property
    def kappa_bound(self) -> float:
        return self.sigma_upper / self.sigma_lower


def kappa_bound(s: int, r: int, alpha: float = 0.0) -> float:
    """(1 + alpha + sqrt(r/s)) / (1 - alpha - sqrt(r/s)); alpha=0 gives the practical estimate."""
    q = math.sqrt(r / s)
    if alpha + q >= 1:
        raise ValueError(f"alpha + sqrt(r/s) = {alpha + q} must be below 1")
    return (1 + alpha + q) / (1 - alpha - q)


def sigma_bounds(s: int, r: int, alpha: float) -> SigmaBounds:
    if r < 1 or s <= r:
        raise ValueError(f"need r >= 1 and s > r, got s={s}, r={r}")
    hi = 1 - math.sqrt(r / s)
    if not 0 < alpha < hi:
        raise ValueError(f"alpha must lie in (0, {hi:.6g}) for s={s}, r={r}; got {alpha}")
    rs, rr = math.sqrt(s), math.sqrt(r)
    return SigmaBounds(
        sigma_lower=1 / ((1 + alpha) * rs + rr),
        sigma_upper=1 / ((1 - alpha) * rs - rr),
        alpha=alpha,
        failure_prob=2 * math.exp(-alpha * alpha * s / 2),
        s=s,
        r=r,
    )


def default_alpha(s: int, r: int, delta: float = 0.01) -> float:
    """alpha with 2 exp(-alpha^2 s / 2) = delta, capped at half the admissible range.

    Small sketches cannot reach delta (alpha would leave (0, 1 - sqrt(r/s)));
    there the cap keeps the bounds finite and the weaker guarantee is logged.
    """
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    alpha = math.sqrt(2.0 / s * math.log(2.0 / delta))
    cap = 0.5 * (1 - math.sqrt(r / s))
    if alpha > cap:
        log.info(
            "s=%d too small for failure probability %g at r=%d; using alpha=%.4g "
            "(failure probability bound %.3g)",
            s, delta, r, cap, 2 * math.exp(-cap * cap * s / 2),
        )
        alpha = cap
    return alpha

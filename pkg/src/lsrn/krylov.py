"""Iterative back-ends for the preconditioned system: LSQR and Chebyshev semi-iteration.

Both start from the zero vector, so every iterate lies in range(op.T) and the
limit is the min-length least-squares solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linop import LinearOperator
from .precond import SigmaBounds

EPS = np.finfo(np.float64).eps


@dataclass
class IterationStats:
    iterations: int
    final_residual_norm: float
    normal_residual_norm: float
    converged: bool
    history: list[float] = field(default_factory=list)
    stop_reason: str = ""


def _finite(*vals) -> None:
    if not all(math.isfinite(v) for v in vals):
        raise FloatingPointError("non-finite value encountered during iteration")


def _final_norms(op: LinearOperator, b: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    r = b - op.apply(y)
    return float(np.linalg.norm(r)), float(np.linalg.norm(op.apply_adjoint(r)))


def lsqr(
    op: LinearOperator,
    b,
    tol: float = 1e-14,
    max_iter: int | None = None,
    record_history: bool = False,
) -> tuple[np.ndarray, IterationStats]:
    """LSQR (Golub-Kahan bidiagonalization) with ``atol = btol = tol`` and no damping.

    Stops when ``||op.T r|| <= tol ||op|| ||r||`` (least-squares test) or
    ``||r|| <= tol ||b|| + tol ||op|| ||y||`` (compatible-system test), where
    ``||op||`` is the running Frobenius estimate of the bidiagonal factor.
    """
    b = np.asarray(b, dtype=np.float64)
    m, n = op.shape
    if b.shape != (m,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({m},)")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter is None:
        max_iter = 2 * min(m, n)
    history: list[float] = []

    y = np.zeros(n)
    bnorm = float(np.linalg.norm(b))
    beta = bnorm
    if beta == 0:
        return y, IterationStats(0, 0.0, 0.0, True, history, "zero right-hand side")
    u = b / beta
    v = op.apply_adjoint(u)
    alfa = float(np.linalg.norm(v))
    if alfa == 0:
        return y, IterationStats(0, bnorm, 0.0, True, history, "right-hand side orthogonal to range")
    v /= alfa
    w = v.copy()
    phibar, rhobar = beta, alfa
    anorm2 = 0.0
    itn = 0
    converged = False
    reason = "iteration limit"

    while itn < max_iter:
        itn += 1
        u = op.apply(v) - alfa * u
        beta = float(np.linalg.norm(u))
        anorm2 += alfa * alfa + beta * beta
        if beta > 0:
            u /= beta
        v = op.apply_adjoint(u) - beta * v
        alfa = float(np.linalg.norm(v))
        if alfa > 0:
            v /= alfa
        _finite(alfa, beta)

        # plane rotation eliminating beta from the lower bidiagonal
        rho = math.hypot(rhobar, beta)
        cs, sn = rhobar / rho, beta / rho
        theta = sn * alfa
        rhobar = -cs * alfa
        phi = cs * phibar
        phibar = sn * phibar
        y += (phi / rho) * w
        w = v - (theta / rho) * w

        anorm = math.sqrt(anorm2)
        rnorm = phibar
        arnorm = alfa * abs(sn * phi)
        ynorm = float(np.linalg.norm(y))
        if record_history:
            history.append(rnorm)

        test1 = rnorm / bnorm
        test2 = arnorm / (anorm * rnorm) if rnorm > 0 else 0.0
        rtol = tol + tol * anorm * ynorm / bnorm
        t1 = test1 / (1 + anorm * ynorm / bnorm)
        if test1 <= rtol or 1 + t1 <= 1:
            converged, reason = True, "compatible system solved"
            break
        if test2 <= tol or 1 + test2 <= 1:
            converged, reason = True, "least-squares solution found"
            break

    res, nres = _final_norms(op, b, y)
    return y, IterationStats(itn, res, nres, converged, history, reason)


def cs_loop_bound(sigma_lower: float, sigma_upper: float, eps: float) -> int:
    """ceil((ln eps - ln 2) / ln((sU - sL) / (sU + sL))), floored at 0.

    The Chebyshev loop runs k = 0 .. bound, i.e. bound + 1 passes.
    """
    if not 0 < sigma_lower <= sigma_upper:
        raise ValueError(f"need 0 < sigma_L <= sigma_U, got ({sigma_lower}, {sigma_upper})")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    rho = (sigma_upper - sigma_lower) / (sigma_upper + sigma_lower)
    num = math.log(eps) - math.log(2)
    if rho == 0 or num >= 0:
        return 0
    return max(0, math.ceil(num / math.log(rho)))


def chebyshev(
    op: LinearOperator,
    b,
    bounds: SigmaBounds | tuple[float, float],
    eps: float = 1e-14,
    check_every: int | None = None,
    record_history: bool = False,
) -> tuple[np.ndarray, IterationStats]:
    """Chebyshev semi-iteration on the normal equations of ``op``.

    ``bounds`` must enclose every nonzero singular value of ``op``. The pass
    count depends only on (sigma_L, sigma_U, eps); no inner products are taken
    unless ``check_every`` enables a periodic residual test.
    """
    if isinstance(bounds, SigmaBounds):
        lo, hi = bounds.sigma_lower, bounds.sigma_upper
    else:
        lo, hi = bounds
    if not 0 < lo <= hi:
        raise ValueError(f"need 0 < sigma_L <= sigma_U, got ({lo}, {hi})")
    b = np.asarray(b, dtype=np.float64)
    m, n = op.shape
    if b.shape != (m,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({m},)")

    d = (hi * hi + lo * lo) / 2
    c = (hi * hi - lo * lo) / 2
    last = cs_loop_bound(lo, hi, eps)
    history: list[float] = []

    x = np.zeros(n)
    v = np.zeros(n)
    r = b.copy()
    alpha = 0.0
    bnorm = float(np.linalg.norm(b))
    passes = 0
    converged = True
    reason = "pass count reached"
    for k in range(last + 1):
        if k == 0:
            beta, alpha = 0.0, 1 / d
        elif k == 1:
            beta, alpha = 0.5 * (c / d) ** 2, 1 / (d - c * c / (2 * d))
        else:
            beta = (alpha * c / 2) ** 2
            alpha = 1 / (d - alpha * c * c / 4)
        v = beta * v + op.apply_adjoint(r)
        x += alpha * v
        r -= alpha * op.apply(v)
        passes += 1
        if record_history:
            history.append(float(np.linalg.norm(r)))
        if check_every and passes % check_every == 0 and k < last:
            rn = float(np.linalg.norm(r))
            if rn <= eps * bnorm or np.linalg.norm(op.apply_adjoint(r)) <= eps * hi * rn:
                reason = "early residual check"
                break

    res, nres = _final_norms(op, b, x)
    return x, IterationStats(passes, res, nres, converged, history, reason)

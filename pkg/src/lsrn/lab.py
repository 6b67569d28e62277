"""Test problems with a prescribed spectrum, and dense SVD oracles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linop import Dense, LinearOperator, aslinop
from .precond import EPS, Preconditioner

ORACLE_MAX_ELEMS = 10**7


@dataclass(frozen=True)
class ProblemSpec:
    m: int
    n: int
    r: int
    cond: float = 1.0
    seed: int = 0
    noise_split: float = 0.5  # ||b_perp|| / ||b||

    def __post_init__(self):
        if min(self.m, self.n) < 1:
            raise ValueError(f"dimensions must be positive, got {self.m}x{self.n}")
        if not 1 <= self.r <= min(self.m, self.n):
            raise ValueError(f"rank {self.r} must lie in [1, min(m, n) = {min(self.m, self.n)}]")
        if not self.cond >= 1:
            raise ValueError(f"cond must be >= 1, got {self.cond}")
        if not 0 <= self.noise_split < 1:
            raise ValueError(f"noise_split must lie in [0, 1), got {self.noise_split}")


@dataclass
class Problem:
    A: Dense
    b: np.ndarray
    x_star: np.ndarray
    spec: ProblemSpec
    singular_values: np.ndarray
    U: np.ndarray  # m x r orthonormal, range(A)
    V: np.ndarray  # n x r orthonormal, range(A.T)


def _orthonormal(rng, rows, cols):
    q, rr = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q * np.sign(np.diag(rr))


def gen_problem(spec: ProblemSpec) -> Problem:
    """A = U diag(sigma) V^T with sigma log-spaced from 1 down to 1/cond.

    b = A x_draw + b_perp, with b_perp orthogonal to range(A) and
    ||b_perp|| = noise_split * ||b|| (zero when range(A) is the whole space).
    x_star is the min-length solution, assembled from the known factors.
    """
    rng = np.random.default_rng(spec.seed)
    m, n, r = spec.m, spec.n, spec.r
    sigma = np.logspace(0.0, -np.log10(spec.cond), r)
    U = _orthonormal(rng, m, r)
    V = _orthonormal(rng, n, r)
    A = (U * sigma) @ V.T

    b_range = A @ rng.standard_normal(n)
    if r < m and spec.noise_split > 0:
        z = rng.standard_normal(m)
        z -= U @ (U.T @ z)
        z -= U @ (U.T @ z)
        f = spec.noise_split
        z *= f / np.sqrt(1 - f * f) * np.linalg.norm(b_range) / np.linalg.norm(z)
        b = b_range + z
    else:
        b = b_range
    x_star = V @ ((U.T @ b) / sigma)
    return Problem(Dense(A), b, x_star, spec, sigma, U, V)


def _dense(A) -> np.ndarray:
    A = aslinop(A)
    if A.nrows * A.ncols > ORACLE_MAX_ELEMS:
        raise ValueError(f"{A.nrows}x{A.ncols} is too large for a dense oracle (limit {ORACLE_MAX_ELEMS} entries)")
    return A.to_dense()


def numerical_rank(sig: np.ndarray, shape: tuple[int, int], rank_tol: float | None = None) -> int:
    if sig.size == 0 or sig[0] == 0:
        return 0
    if rank_tol is None:
        rank_tol = max(shape) * EPS
    return int(np.count_nonzero(sig > rank_tol * sig[0]))


def minlen_oracle(A, b, rank_tol: float | None = None) -> np.ndarray:
    """x* = V_r diag(1/sigma_r) U_r^T b from a dense SVD."""
    a = _dense(A)
    b = np.asarray(b, dtype=np.float64)
    u, sig, vt = np.linalg.svd(a, full_matrices=False)
    r = numerical_rank(sig, a.shape, rank_tol)
    return vt[:r].T @ ((u[:, :r].T @ b) / sig[:r])


def preconditioned_dense(A: LinearOperator, P: Preconditioner) -> np.ndarray:
    A = aslinop(A)
    if P.side == "tall":
        if A.nrows * P.rank > ORACLE_MAX_ELEMS * 10:
            raise ValueError("preconditioned operator too large to densify")
        return A.apply(P.factor)
    if P.rank * A.ncols > ORACLE_MAX_ELEMS * 10:
        raise ValueError("preconditioned operator too large to densify")
    return A.apply_adjoint(P.factor).T


def measure_kappa(A: LinearOperator, P: Preconditioner, rank_tol: float | None = None) -> float:
    """sigma_max / sigma_min over the nonzero singular values of A N (or M^T A)."""
    sig = np.linalg.svd(preconditioned_dense(A, P), compute_uv=False)
    r = numerical_rank(sig, (max(A.shape), P.rank), rank_tol if rank_tol is not None else 1e-10)
    return float(sig[0] / sig[r - 1])

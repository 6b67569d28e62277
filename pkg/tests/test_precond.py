import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsrn.gauss import GaussianSource, fill_gaussian
from lsrn.lab import ProblemSpec, gen_problem, measure_kappa, preconditioned_dense
from lsrn.precond import default_alpha, factor_sketch, kappa_bound, sigma_bounds
from lsrn.sketch import SketchResult
from lsrn.solver import SolveOptions, sketch_for


def _sk(a, side="left"):
    s = a.shape[0] if side == "left" else a.shape[1]
    return SketchResult(np.asarray(a, dtype=float), s, side, 0, 0.0, 0.0, 0.0)


def test_orthonormal_sketch_gives_v():
    q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((30, 6)))
    P = factor_sketch(_sk(q))
    assert P.rank == 6
    np.testing.assert_allclose(np.abs(P.factor.T @ P.factor), np.eye(6), atol=1e-12)
    np.testing.assert_allclose(P.sketch_singular_values, 1, atol=1e-12)


def test_constructed_spectrum_rank():
    rng = np.random.default_rng(1)
    u, _ = np.linalg.qr(rng.standard_normal((40, 10)))
    v, _ = np.linalg.qr(rng.standard_normal((10, 10)))
    sig = np.r_[np.ones(9), 1e-20]
    P = factor_sketch(_sk((u * sig) @ v.T), rank_tol=1e-12)
    assert P.rank == 9
    assert P.factor.shape == (10, 9)


def test_wide_factor_is_left_vectors():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((5, 12))
    P = factor_sketch(_sk(a, "right"))
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    assert P.side == "wide" and P.factor.shape == (5, 5)
    np.testing.assert_allclose(np.abs(P.factor * s), np.abs(u), atol=1e-12)


def test_zero_sketch_rejected():
    with pytest.raises(ValueError, match="sketch has numerical rank 0"):
        factor_sketch(_sk(np.zeros((8, 3))))


def test_nonfinite_sketch_rejected():
    a = np.ones((4, 2))
    a[0, 0] = np.inf
    with pytest.raises(ValueError):
        factor_sketch(_sk(a))


@pytest.mark.parametrize("seed", range(3))
def test_spectrum_transfer(seed):
    """sigma(A N) equals sigma(pinv(G U)) with U spanning range(A)."""
    p = gen_problem(ProblemSpec(500, 50, 30, 1e4, seed=seed))
    opts = SolveOptions(seed=seed)
    sk = sketch_for(p.A, opts)
    P = factor_sketch(sk)
    assert P.rank == 30
    got = np.linalg.svd(preconditioned_dense(p.A, P), compute_uv=False)
    G = fill_gaussian(GaussianSource(seed), sk.s, 500)
    u = np.linalg.svd(p.A.to_dense(), full_matrices=False)[0][:, :30]
    want = np.sort(1 / np.linalg.svd(G @ u, compute_uv=False))[::-1]
    np.testing.assert_allclose(got, want, rtol=1e-10)


def test_factor_spans_row_space():
    p = gen_problem(ProblemSpec(300, 40, 25, 1e6, seed=4))
    P = factor_sketch(sketch_for(p.A, SolveOptions()))
    leak = P.factor - p.V @ (p.V.T @ P.factor)
    assert np.linalg.norm(leak) <= 1e-10 * np.linalg.norm(P.factor)


def test_sigma_bounds_worked_example():
    b = sigma_bounds(400, 100, 0.1)
    assert b.sigma_upper == pytest.approx(0.125, rel=1e-14)
    assert b.sigma_lower == pytest.approx(0.03125, rel=1e-14)
    assert b.failure_prob == pytest.approx(2 * math.exp(-2), rel=1e-14)
    assert b.kappa_bound == pytest.approx(kappa_bound(400, 100, 0.1), rel=1e-14)


def test_kappa_bound_limits():
    assert kappa_bound(400, 100) == pytest.approx(3.0, rel=1e-15)
    assert kappa_bound(200, 100) == pytest.approx((1 + math.sqrt(0.5)) / (1 - math.sqrt(0.5)))
    assert kappa_bound(200, 100) < 6
    assert kappa_bound(400, 100, 1e-9) == pytest.approx(3.0, rel=1e-7)


@settings(max_examples=200, deadline=None)
@given(r=st.integers(1, 500), extra=st.integers(1, 2000), frac=st.floats(0.001, 0.9))
def test_rate_identity(r, extra, frac):
    s = r + extra
    alpha = frac * (1 - math.sqrt(r / s))
    b = sigma_bounds(s, r, alpha)
    assert b.sigma_upper > b.sigma_lower > 0
    assert abs(b.rate - (alpha + math.sqrt(r / s))) <= 1e-15 * 4
    assert b.kappa_bound == pytest.approx(kappa_bound(s, r, alpha), rel=1e-9)


@pytest.mark.parametrize("alpha", [0.0, -0.1, 0.5, 1.0])
def test_alpha_outside_interval(alpha):
    with pytest.raises(ValueError):
        sigma_bounds(400, 100, alpha)


def test_default_alpha():
    s, r = 20000, 100
    a = default_alpha(s, r, 0.01)
    assert 2 * math.exp(-a * a * s / 2) == pytest.approx(0.01)
    capped = default_alpha(100, 50, 0.01)
    assert capped == pytest.approx(0.5 * (1 - math.sqrt(0.5)))


def test_concentration_at_twice_rank():
    p = gen_problem(ProblemSpec(2000, 200, 200, 1e6, seed=0))
    kappas = [measure_kappa(p.A, factor_sketch(sketch_for(p.A, SolveOptions(seed=t)))) for t in range(100)]
    assert sum(k <= 6 for k in kappas) >= 99

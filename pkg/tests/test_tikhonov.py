import numpy as np
import pytest

from lsrn.lab import ProblemSpec, gen_problem, minlen_oracle
from lsrn.linop import Dense, DimensionError
from lsrn.tikhonov import RidgeSpec, solve_ridge, solve_ridge_path


def _oracle(a, b, w):
    return np.linalg.solve(a.T @ a + w.T @ w, a.T @ b)


def _rel(x, ref):
    return np.linalg.norm(x - ref) / np.linalg.norm(ref)


@pytest.mark.parametrize("shape", [(200, 20), (20, 200), (60, 40), (40, 60)])
@pytest.mark.parametrize("lam", [1e-3, 1.0, 1e3])
def test_scalar_lambda_matches_normal_equations(shape, lam):
    m, n = shape
    p = gen_problem(ProblemSpec(m, n, min(m, n), 1e3, seed=1))
    a = p.A.to_dense()
    x = solve_ridge(p.A, p.b, lam).x
    assert _rel(x, _oracle(a, p.b, lam * np.eye(n))) <= 1e-8


def test_wide_closed_form_agrees():
    p = gen_problem(ProblemSpec(20, 200, 20, 1e2, seed=2))
    a = p.A.to_dense()
    alt = a.T @ np.linalg.solve(a @ a.T + np.eye(20), p.b)
    assert _rel(solve_ridge(p.A, p.b, 1.0).x, alt) <= 1e-8


@pytest.mark.parametrize("shape", [(150, 15), (15, 150)])
def test_diagonal_regularizer(shape):
    m, n = shape
    p = gen_problem(ProblemSpec(m, n, min(m, n), 1e2, seed=3))
    d = np.linspace(0.1, 3.0, n)
    x = solve_ridge(p.A, p.b, d).x
    assert _rel(x, _oracle(p.A.to_dense(), p.b, np.diag(d))) <= 1e-8


def test_general_regularizer_tall():
    p = gen_problem(ProblemSpec(150, 15, 15, 1e2, seed=4))
    w = np.eye(15) + 0.2 * np.random.default_rng(4).standard_normal((15, 15))
    x = solve_ridge(p.A, p.b, Dense(w)).x
    assert _rel(x, _oracle(p.A.to_dense(), p.b, w)) <= 1e-8


def test_general_regularizer_wide_needs_opt_in():
    p = gen_problem(ProblemSpec(15, 150, 15, 1e2, seed=5))
    w = np.eye(150) + 0.05 * np.random.default_rng(5).standard_normal((150, 150))
    with pytest.raises(ValueError, match="allow_general"):
        solve_ridge(p.A, p.b, Dense(w))
    x = solve_ridge(p.A, p.b, RidgeSpec(Dense(w), allow_general=True)).x
    assert _rel(x, _oracle(p.A.to_dense(), p.b, w)) <= 1e-8


def test_singular_regularizer_on_wide_path():
    p = gen_problem(ProblemSpec(10, 100, 10, seed=6))
    with pytest.raises(ValueError, match="singular"):
        solve_ridge(p.A, p.b, 0.0)
    d = np.ones(100)
    d[3] = 0
    with pytest.raises(ValueError, match="singular"):
        solve_ridge(p.A, p.b, d)
    with pytest.raises(ValueError, match="singular"):
        solve_ridge(p.A, p.b, RidgeSpec(Dense(np.zeros((100, 100))), allow_general=True))


def test_dimension_mismatch():
    p = gen_problem(ProblemSpec(100, 10, 10, seed=7))
    with pytest.raises(DimensionError):
        solve_ridge(p.A, p.b[:-1], 1.0)
    with pytest.raises(DimensionError):
        solve_ridge(p.A, p.b, np.ones(9))
    with pytest.raises(DimensionError):
        solve_ridge(p.A, p.b, Dense(np.eye(9)))


def test_huge_penalty_drives_solution_to_zero():
    p = gen_problem(ProblemSpec(200, 20, 20, 1e2, seed=8))
    lam = 1e8 * p.singular_values.max()
    x = solve_ridge(p.A, p.b, lam).x
    assert np.linalg.norm(x) <= 1e-6 * np.linalg.norm(minlen_oracle(p.A, p.b))


@pytest.mark.parametrize("shape", [(200, 20), (20, 200)])
def test_vanishing_penalty_gives_min_length_solution(shape):
    m, n = shape
    # full rank: a stored rank-deficient A has singular values near 1e-16,
    # which a 1e-10 penalty would amplify by s / lam^2
    p = gen_problem(ProblemSpec(m, n, min(m, n), 1e3, seed=9))
    lam = 1e-10 * p.singular_values.max()
    x = solve_ridge(p.A, p.b, lam).x
    ref = minlen_oracle(p.A, p.b)
    assert _rel(x, ref) <= 1e-6


def test_path_reuse_matches_independent_solves():
    p = gen_problem(ProblemSpec(300, 25, 25, 1e4, seed=10))
    lams = [1e-3, 1.0, 1e3]
    path = solve_ridge_path(p.A, p.b, lams, seed=5)
    for lam, rep in zip(lams, path):
        single = solve_ridge(p.A, p.b, lam, seed=5).x
        assert np.linalg.norm(rep.x - single) <= 1e-10 * np.linalg.norm(single)
        assert "shared_sketch" in rep.timings


def test_path_requires_tall():
    p = gen_problem(ProblemSpec(10, 100, 10, seed=11))
    with pytest.raises(ValueError, match="tall"):
        solve_ridge_path(p.A, p.b, [1.0])

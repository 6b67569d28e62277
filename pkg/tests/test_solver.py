import json
import math

import numpy as np
import pytest
import scipy.sparse as sp

from lsrn.lab import ProblemSpec, gen_problem, minlen_oracle
from lsrn.linop import CSR, Dense
from lsrn.solver import SolveOptions, iteration_bound, solve


def _rel(x, ref):
    return np.linalg.norm(x - ref) / np.linalg.norm(ref)


def test_zero_rhs_gives_zero():
    A = Dense(np.random.default_rng(0).standard_normal((200, 10)))
    rep = solve(A, np.zeros(200))
    assert not rep.x.any()
    assert rep.iterations == 0


def test_tall_full_rank_ill_conditioned():
    p = gen_problem(ProblemSpec(1000, 50, 50, 1e6, seed=1))
    rep = solve(p.A, p.b)
    assert rep.orientation == "tall" and rep.detected_rank == 50
    assert rep.converged and rep.iterations <= 100
    assert _rel(rep.x, minlen_oracle(p.A, p.b)) <= 1e-6


def test_rank_deficient_needs_fewer_iterations():
    full = gen_problem(ProblemSpec(1000, 50, 50, 1e6, seed=2))
    defic = gen_problem(ProblemSpec(1000, 50, 30, 1e6, seed=2))
    rf, rd = solve(full.A, full.b), solve(defic.A, defic.b)
    assert rd.detected_rank == 30
    assert _rel(rd.x, minlen_oracle(defic.A, defic.b)) <= 1e-6
    assert rd.iterations < rf.iterations


@pytest.mark.parametrize("solver", ["lsqr", "cs"])
@pytest.mark.parametrize("r", [40, 24])
def test_wide(solver, r):
    p = gen_problem(ProblemSpec(40, 800, r, 1e2, seed=3))
    rep = solve(p.A, p.b, solver=solver)
    assert rep.orientation == "wide" and rep.detected_rank == r
    assert _rel(rep.x, minlen_oracle(p.A, p.b)) <= 1e-10


def test_orientation_symmetry():
    p = gen_problem(ProblemSpec(600, 30, 20, 1e4, seed=4))
    At = Dense(p.A.to_dense().T)
    c = np.random.default_rng(4).standard_normal(30)
    tall = solve(p.A, p.b)
    wide = solve(At, c)
    assert _rel(tall.x, minlen_oracle(p.A, p.b)) <= 1e-6
    assert _rel(wide.x, minlen_oracle(At, c)) <= 1e-6


def test_sparse_input():
    rng = np.random.default_rng(5)
    s = sp.random(3000, 40, density=0.05, random_state=rng, format="csr")
    b = rng.standard_normal(3000)
    rep = solve(CSR.from_scipy(s), b)
    assert _rel(rep.x, minlen_oracle(s.toarray(), b)) <= 1e-10


def test_determinism():
    p = gen_problem(ProblemSpec(500, 20, 20, 1e3, seed=6))
    a, b = solve(p.A, p.b, seed=9), solve(p.A, p.b, seed=9)
    assert np.array_equal(a.x, b.x)
    da, db = a.to_dict(), b.to_dict()
    da.pop("timings"), db.pop("timings")
    assert da == db


def test_report_schema_is_json_and_finite():
    p = gen_problem(ProblemSpec(300, 15, 15, 10.0, seed=7))
    d = solve(p.A, p.b, record_history=True).to_dict(include_x=True)
    text = json.dumps(d)
    assert "NaN" not in text and "Infinity" not in text
    for key in ("seed", "gamma", "eps", "alpha", "detected_rank", "iterations", "timings", "s", "sigma_lower"):
        assert key in d
    assert set(d["timings"]) >= {"randn", "mult", "svd", "iter", "total"}
    assert len(d["history"]) == d["iterations"]
    assert all(v >= 0 for v in d["timings"].values())


def test_iteration_bound_examples():
    # (ln 1e-14 - ln 2) / ln sqrt(1/2) = 95.014, so the ceiling is 96
    assert iteration_bound(1e-14, 1, 2) == 96
    assert iteration_bound(1e-14, 50, 100) == 96
    assert iteration_bound(1e-14, 1, 16) == 24
    assert iteration_bound(2.0, 1, 2) == 0
    with pytest.raises(ValueError, match="oversampling too small for requested alpha"):
        iteration_bound(1e-14, 50, 100, alpha=0.3)


def test_iteration_bound_near_half():
    for ratio in np.linspace(0.48, 0.52, 9):
        s = 10_000
        r = int(round(ratio * s))
        assert 90 <= iteration_bound(1e-14, r, s) <= 110


def test_near_square_warns():
    p = gen_problem(ProblemSpec(60, 40, 40, 1.0))
    with pytest.warns(UserWarning, match="not strongly rectangular"):
        solve(p.A, p.b, gamma=1.2)


def test_options_validation():
    with pytest.raises(ValueError, match="oversampling factor must exceed 1"):
        SolveOptions(gamma=1.0)
    for bad in ({"eps": 0}, {"eps": 1}, {"delta": 0}, {"solver": "cg"}, {"refine": -1}):
        with pytest.raises(ValueError):
            SolveOptions(**bad)


def test_bad_rhs():
    A = Dense(np.ones((10, 2)))
    with pytest.raises(ValueError):
        solve(A, np.ones(9))
    with pytest.raises(ValueError):
        solve(A, np.r_[np.ones(9), np.inf])


def test_zero_matrix_rejected():
    with pytest.raises(ValueError, match="numerical rank 0"):
        solve(Dense(np.zeros((100, 5))), np.ones(100))


def test_cap_reports_not_converged():
    p = gen_problem(ProblemSpec(400, 40, 40, 1e6, seed=8))
    rep = solve(p.A, p.b, max_iter=3, refine=0)
    assert not rep.converged and rep.iterations == 3


def test_stage_timings_cover_wall_time():
    rng = np.random.default_rng(10)
    m, n = 100_000, 1_000
    A = CSR.from_scipy(sp.random(m, n, density=2e-3, random_state=rng, format="csr") + sp.eye(m, n, format="csr"))
    rep = solve(A, rng.standard_normal(m))
    t = rep.timings
    assert t["randn"] + t["mult"] + t["svd"] + t["iter"] >= 0.95 * t["total"]
    assert math.isfinite(t["total"])

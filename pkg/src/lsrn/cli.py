"""Command-line front end: ``lsrn solve | gen | bench-cond | bench-gamma``.

Exit codes: 0 success, 1 bad input (parse or dimension error), 2 solver did
not converge within its iteration cap.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from contextlib import nullcontext
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import _parallel
from .lab import ProblemSpec, gen_problem, measure_kappa
from .linop import DimensionError
from .mmio import read_matrix, read_vector, write_matrix, write_vector
from .precond import default_alpha, factor_sketch, kappa_bound
from .solver import SolveOptions, iteration_bound, sketch_for, solve, solve_with_sketch
from .tikhonov import RidgeSpec, solve_ridge

log = logging.getLogger("lsrn")

# Bump when a column is added, removed or moved.
CSV_VERSION = 1
COND_COLUMNS = [
    "version", "m", "n", "r", "s", "cond", "trials",
    "kappa_max", "kappa_mean", "kappa_ref", "kappa_bound_alpha",
    "iters_max", "iters_mean", "iter_bound",
    "seed",
]
GAMMA_COLUMNS = [
    "version", "m", "n", "r", "cond", "gamma", "s", "iterations",
    "randn", "mult", "svd", "iter", "total",
    "repeats", "seed",
]


@dataclass
class BenchCondConfig:
    m: int = 2000
    n: int = 200
    ranks: tuple[int, ...] = (160, 200)
    ratios: tuple[float, ...] = (2.0,)  # s / r
    conds: tuple[float, ...] = (1e2, 1e4, 1e6, 1e8)
    trials: int = 10
    seed: int = 0
    eps: float = 1e-14
    delta: float = 0.01


@dataclass
class BenchGammaConfig:
    m: int = 20000
    n: int = 500
    r: int | None = None
    cond: float = 1e6
    gammas: tuple[float, ...] = tuple(round(1.2 + 0.2 * i, 1) for i in range(10))
    repeats: int = 5
    seed: int = 0
    eps: float = 1e-14


def bench_cond(cfg: BenchCondConfig) -> list[dict]:
    """One row per (cond, r, s) cell: kappa(AN) and LSQR iterations over ``trials`` sketches of a fixed A.

    Every cell draws its own A and its own sketches, so rows are independent.
    """
    rows = []
    short = min(cfg.m, cfg.n)
    cell = 0
    for cond in cfg.conds:
        for r in cfg.ranks:
            prob = gen_problem(ProblemSpec(cfg.m, cfg.n, r, cond, seed=cfg.seed * 1000 + cell))
            for ratio in cfg.ratios:
                cell += 1
                s = math.ceil(round(ratio * r, 9))
                opts = SolveOptions(gamma=s / short, eps=cfg.eps, delta=cfg.delta, refine=0)
                kappas, iters = [], []
                for t in range(cfg.trials):
                    o = replace(opts, seed=(cfg.seed * 1000 + cell) * 1000 + t)
                    sk = sketch_for(prob.A, o)
                    kappas.append(measure_kappa(prob.A, factor_sketch(sk, o.rank_tol)))
                    iters.append(solve_with_sketch(prob.A, prob.b, sk, o).iterations)
                rows.append({
                    "version": CSV_VERSION,
                    "m": cfg.m,
                    "n": cfg.n,
                    "r": r,
                    "s": s,
                    "cond": cond,
                    "trials": cfg.trials,
                    "kappa_max": max(kappas),
                    "kappa_mean": float(np.mean(kappas)),
                    "kappa_ref": kappa_bound(s, r, 0.0),
                    "kappa_bound_alpha": kappa_bound(s, r, default_alpha(s, r, cfg.delta)),
                    "iters_max": max(iters),
                    "iters_mean": float(np.mean(iters)),
                    "iter_bound": iteration_bound(cfg.eps, r, s, 0.0),
                    "seed": cfg.seed,
                })
    return rows


def bench_gamma(cfg: BenchGammaConfig) -> list[dict]:
    """Stage timings per oversampling factor on one generated problem.

    Repeats sweep the whole gamma grid in turn, so a slow spell on a shared
    machine hits one repeat of several gammas rather than every repeat of
    one; each stage keeps its fastest time.
    """
    r = cfg.r if cfg.r is not None else min(cfg.m, cfg.n)
    prob = gen_problem(ProblemSpec(cfg.m, cfg.n, r, cfg.cond, seed=cfg.seed))
    best: dict[float, dict] = {}
    last = {}
    for _ in range(cfg.repeats):
        for gamma in cfg.gammas:
            rep = solve(prob.A, prob.b, gamma=gamma, eps=cfg.eps, seed=cfg.seed)
            prev = best.get(gamma)
            best[gamma] = dict(rep.timings) if prev is None else {k: min(prev[k], rep.timings[k]) for k in prev}
            last[gamma] = rep
    return [
        {
            "version": CSV_VERSION,
            "m": cfg.m,
            "n": cfg.n,
            "r": r,
            "cond": cfg.cond,
            "gamma": gamma,
            "s": last[gamma].s,
            "iterations": last[gamma].iterations,
            **{k: best[gamma][k] for k in ("randn", "mult", "svd", "iter", "total")},
            "repeats": cfg.repeats,
            "seed": cfg.seed,
        }
        for gamma in cfg.gammas
    ]


def write_csv(rows: list[dict], columns: list[str], out) -> None:
    w = csv.DictWriter(out, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t)


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t)


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    d = SolveOptions()
    p.add_argument("--gamma", type=float, default=d.gamma, help="oversampling factor (> 1)")
    p.add_argument("--tol", type=float, default=d.eps, help="relative tolerance eps")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--alpha", type=float, default=None, help="fixed bound parameter alpha")
    g.add_argument("--delta", type=float, default=d.delta, help="failure probability that sets alpha")
    p.add_argument("--solver", choices=("lsqr", "cs"), default=d.solver)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--rank-tol", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--refine", type=int, default=d.refine, help="correction sweeps after the main solve")
    p.add_argument("--history", action="store_true", help="record the residual history in the report")


def _options(ns) -> SolveOptions:
    return SolveOptions(
        gamma=ns.gamma,
        eps=ns.tol,
        delta=ns.delta,
        alpha=ns.alpha,
        solver=ns.solver,
        seed=ns.seed,
        rank_tol=ns.rank_tol,
        max_iter=ns.max_iter,
        refine=ns.refine,
        record_history=ns.history,
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lsrn", description="Min-length least squares via random normal projection.")
    ap.add_argument("--threads", type=int, default=None, help="worker count (default: hardware parallelism)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve min ||A x - b|| from files")
    p.add_argument("matrix", help="Matrix Market file")
    p.add_argument("rhs", help="vector file, one value per line")
    p.add_argument("-o", "--out", default="x.txt", help="solution vector file")
    p.add_argument("--report", default="-", help="report path ('-' for stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json", help="report format")
    reg = p.add_mutually_exclusive_group()
    reg.add_argument("--lambda", dest="lam", type=float, default=None, help="ridge penalty with W = lambda I")
    reg.add_argument("--w-file", default=None, help="Matrix Market regularizer W (tall A only)")
    _add_solver_flags(p)

    p = sub.add_parser("gen", help="write a generated test problem")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--cond", type=float, default=1.0)
    p.add_argument("--noise-split", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")

    c = BenchCondConfig()
    p = sub.add_parser("bench-cond", help="kappa(AN) and iterations across condition numbers")
    p.add_argument("--m", type=int, default=c.m)
    p.add_argument("--n", type=int, default=c.n)
    p.add_argument("--ranks", type=_ints, default=c.ranks)
    p.add_argument("--ratios", type=_floats, default=c.ratios, help="s / r values")
    p.add_argument("--conds", type=_floats, default=c.conds)
    p.add_argument("--trials", type=int, default=c.trials)
    p.add_argument("--seed", type=int, default=c.seed)
    p.add_argument("--tol", type=float, default=c.eps)
    p.add_argument("--delta", type=float, default=c.delta)
    p.add_argument("-o", "--out", default="-")

    g = BenchGammaConfig()
    p = sub.add_parser("bench-gamma", help="stage timings across oversampling factors")
    p.add_argument("--m", type=int, default=g.m)
    p.add_argument("--n", type=int, default=g.n)
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--cond", type=float, default=g.cond)
    p.add_argument("--gammas", type=_floats, default=g.gammas)
    p.add_argument("--repeats", type=int, default=g.repeats)
    p.add_argument("--seed", type=int, default=g.seed)
    p.add_argument("--tol", type=float, default=g.eps)
    p.add_argument("-o", "--out", default="-")
    return ap


def _open_out(path: str):
    return nullcontext(sys.stdout) if path == "-" else open(path, "w", newline="")


def _log_seed(seed: int) -> None:
    print(f"lsrn: seed={seed}", file=sys.stderr)


def _cmd_solve(ns) -> int:
    opts = _options(ns)
    A = read_matrix(ns.matrix)
    b = read_vector(ns.rhs)
    if b.shape[0] != A.nrows:
        raise DimensionError(f"{ns.rhs}: right-hand side has {b.shape[0]} entries, matrix has {A.nrows} rows")
    _log_seed(opts.seed)
    if ns.lam is not None:
        rep = solve_ridge(A, b, RidgeSpec(ns.lam), opts)
    elif ns.w_file is not None:
        if A.nrows < A.ncols:
            raise DimensionError("--w-file is only supported for tall A; use --lambda for wide A")
        rep = solve_ridge(A, b, RidgeSpec(read_matrix(ns.w_file)), opts)
    else:
        rep = solve(A, b, opts)
    write_vector(ns.out, rep.x)
    d = rep.to_dict()
    with _open_out(ns.report) as fh:
        if ns.format == "json":
            json.dump(d, fh, indent=2)
            fh.write("\n")
        else:
            flat = {k: v for k, v in d.items() if not isinstance(v, (dict, list))}
            flat.update({f"time_{k}": v for k, v in d["timings"].items()})
            write_csv([flat], list(flat), fh)
    return 0 if rep.converged else 2


def _cmd_gen(ns) -> int:
    rank = ns.rank if ns.rank is not None else min(ns.m, ns.n)
    spec = ProblemSpec(ns.m, ns.n, rank, ns.cond, ns.seed, ns.noise_split)
    prob = gen_problem(spec)
    out = Path(ns.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tag = f"m={spec.m} n={spec.n} r={spec.r} cond={spec.cond:g} seed={spec.seed} noise_split={spec.noise_split:g}"
    write_matrix(out / "A.mtx", prob.A, tag)
    write_vector(out / "b.txt", prob.b, tag)
    write_vector(out / "x_star.txt", prob.x_star, tag)
    _log_seed(spec.seed)
    log.info("wrote %s", out)
    return 0


def _cmd_bench_cond(ns) -> int:
    cfg = BenchCondConfig(ns.m, ns.n, ns.ranks, ns.ratios, ns.conds, ns.trials, ns.seed, ns.tol, ns.delta)
    _log_seed(cfg.seed)
    rows = bench_cond(cfg)
    with _open_out(ns.out) as fh:
        write_csv(rows, COND_COLUMNS, fh)
    return 0


def _cmd_bench_gamma(ns) -> int:
    cfg = BenchGammaConfig(ns.m, ns.n, ns.rank, ns.cond, ns.gammas, ns.repeats, ns.seed, ns.tol)
    _log_seed(cfg.seed)
    rows = bench_gamma(cfg)
    with _open_out(ns.out) as fh:
        write_csv(rows, GAMMA_COLUMNS, fh)
    return 0


COMMANDS = {
    "solve": _cmd_solve,
    "gen": _cmd_gen,
    "bench-cond": _cmd_bench_cond,
    "bench-gamma": _cmd_bench_gamma,
}


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="lsrn: %(message)s")
    if ns.threads is not None:
        _parallel.set_workers(ns.threads)
    try:
        return COMMANDS[ns.command](ns)
    except (ValueError, OSError) as exc:  # ParseError and DimensionError included
        print(f"lsrn: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

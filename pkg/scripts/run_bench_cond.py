"""Sweep kappa(AN) and iteration counts over condition numbers; writes CSV."""
import argparse
import sys

from lsrn.cli import COND_COLUMNS, BenchCondConfig, bench_cond, write_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=BenchCondConfig.trials)
    ap.add_argument("--seed", type=int, default=BenchCondConfig.seed)
    ap.add_argument("-o", "--out", default="bench_cond.csv")
    ns = ap.parse_args()
    rows = bench_cond(BenchCondConfig(trials=ns.trials, seed=ns.seed))
    with open(ns.out, "w", newline="") as fh:
        write_csv(rows, COND_COLUMNS, fh)
    for row in rows:
        print(f"r={row['r']} s={row['s']} cond={row['cond']:.0e} kappa_max={row['kappa_max']:.3f} "
              f"iters_max={row['iters_max']}", file=sys.stderr)


if __name__ == "__main__":
    main()

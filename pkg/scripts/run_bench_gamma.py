"""Stage timings of a tall solve across oversampling factors; writes CSV."""
import argparse
import sys

from lsrn.cli import GAMMA_COLUMNS, BenchGammaConfig, bench_gamma, write_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=BenchGammaConfig.m)
    ap.add_argument("--n", type=int, default=BenchGammaConfig.n)
    ap.add_argument("--repeats", type=int, default=BenchGammaConfig.repeats)
    ap.add_argument("-o", "--out", default="bench_gamma.csv")
    ns = ap.parse_args()
    rows = bench_gamma(BenchGammaConfig(m=ns.m, n=ns.n, repeats=ns.repeats))
    with open(ns.out, "w", newline="") as fh:
        write_csv(rows, GAMMA_COLUMNS, fh)
    for row in rows:
        print(f"gamma={row['gamma']:.1f} iters={row['iterations']} total={row['total']:.3f}s", file=sys.stderr)


if __name__ == "__main__":
    main()

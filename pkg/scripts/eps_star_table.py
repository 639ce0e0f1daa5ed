"""Table of squaring counts and log2(1/eps*) over a grid of game sizes."""
import argparse
from fractions import Fraction

from thpe.logic import bound_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta", type=Fraction, default=Fraction(1, 2))
    ap.add_argument("--B", type=int, default=2)
    ap.add_argument("--c", type=Fraction, default=Fraction(1))
    args = ap.parse_args()
    print(f"{'n':>3} {'m':>4} {'squarings':>10}  log2(1/eps*)")
    for n in (2, 3, 4, 5):
        for m in (n, 2 * n, 3 * n):
            r = bound_report(n, m, args.B, args.delta, args.c)
            print(f"{n:>3} {m:>4} {r.squarings:>10}  {r.log2_text()}")


if __name__ == "__main__":
    main()

"""Solve the analytic example games and print each eps-stage of the trace."""
import argparse
from fractions import Fraction
from pathlib import Path

from thpe.cli import read_game
from thpe.solver import SolveConfig, approximate_pe
from thpe.verifier import check_certificate

GAMES = Path(__file__).resolve().parent.parent / "games"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta", type=Fraction, default=Fraction(1, 1000))
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    for name in ("weak_dominance", "matching_pennies", "coordination3", "three_player_b2"):
        g = read_game(GAMES / f"{name}.txt")
        res = approximate_pe(g, args.delta, SolveConfig(workers=args.workers, max_stages=12))
        print(f"== {name}  counts={g.strategy_counts}  status={res.status}")
        for rec in res.trace:
            print("  " + rec.line())
        last = res.trace[-1]
        _, ok = check_certificate(g, last.profile, last.eps, 0)
        print(f"  final profile {[[float(p) for p in b] for b in res.profile.blocks]}")
        print(f"  exact eps-PE certificate at last stage: {'valid' if ok else 'invalid'}")


if __name__ == "__main__":
    main()

"""Compare the compiled circuit against the direct map on a random corpus."""
import argparse
import random
import time
from fractions import Fraction

from thpe.circuit import eval_exact
from thpe.compiler import compile_f_eps, reference_f_eps
from thpe.game import Game, MixedProfile


def _block(rng, k):
    w = [rng.randint(0, 20) for _ in range(k)]
    if not any(w):
        w[rng.randrange(k)] = 1
    s = sum(w)
    return tuple(Fraction(v, s) for v in w)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--games", type=int, default=10)
    ap.add_argument("--points", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    total = bad = 0
    start = time.perf_counter()
    for _ in range(args.games):
        counts = tuple(rng.randint(1, 3) for _ in range(rng.choice((2, 3))))
        g = Game.from_function(counts, lambda p: tuple(
            Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for _ in counts))
        c = compile_f_eps(g)
        for _ in range(args.points):
            x = MixedProfile(tuple(_block(rng, k) for k in counts))
            eps = Fraction(1, rng.randint(g.m + 1, 10 * g.m + 10))
            total += 1
            bad += eval_exact(c, x.flat, eps) != list(reference_f_eps(g, x, eps).flat)
        print(f"counts={counts} gates={c.gate_count} depth={c.depth}")
    print(f"{total} points, {bad} mismatches, {time.perf_counter() - start:.1f}s")
    raise SystemExit(1 if bad else 0)


if __name__ == "__main__":
    main()

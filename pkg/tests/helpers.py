"""Shared games, strategies and independent oracles for the test suite."""
from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

from hypothesis import strategies as st

from thpe.game import Game, MixedProfile, read_game

GAMES_DIR = Path(__file__).resolve().parent.parent / "games"


def weak_dominance() -> Game:
    return read_game(GAMES_DIR / "weak_dominance.txt")


def matching_pennies() -> Game:
    return read_game(GAMES_DIR / "matching_pennies.txt")


def coordination3() -> Game:
    return read_game(GAMES_DIR / "coordination3.txt")


def three_player_b2() -> Game:
    return read_game(GAMES_DIR / "three_player_b2.txt")


def profile(*blocks) -> MixedProfile:
    return MixedProfile(tuple(tuple(Fraction(p) for p in b) for b in blocks))


def eps_point(n: int, eps) -> MixedProfile:
    """Every player puts 1 - eps on the first strategy of two."""
    eps = Fraction(eps)
    return profile(*[(1 - eps, eps)] * n)


# -- random objects (plain RNG, for the acceptance corpus) ---------------------------

def random_game(rng: random.Random, players=(2, 3), counts=(1, 2, 3), lo=-3, hi=3) -> Game:
    n = rng.choice(players)
    sc = tuple(rng.choice(counts) for _ in range(n))
    return Game.from_function(sc, lambda _p: tuple(rng.randint(lo, hi) for _ in range(n)))


def random_block(rng: random.Random, c: int, den: int = 97) -> tuple[Fraction, ...]:
    w = [rng.randint(0, den) for _ in range(c)]
    if sum(w) == 0:
        w[rng.randrange(c)] = 1
    s = sum(w)
    return tuple(Fraction(a, s) for a in w)


def random_profile(rng: random.Random, counts) -> MixedProfile:
    return MixedProfile(tuple(random_block(rng, c) for c in counts))


def random_eps(rng: random.Random, m: int) -> Fraction:
    """Rational in (0, 1/m)."""
    den = rng.randint(2, 500)
    return Fraction(rng.randint(1, den - 1), den * m)


# -- hypothesis strategies -----------------------------------------------------------

@st.composite
def games(draw, players=(2, 3), counts=(1, 2, 3), lo=-3, hi=3) -> Game:
    n = draw(st.sampled_from(players))
    sc = tuple(draw(st.sampled_from(counts)) for _ in range(n))
    size = 1
    for c in sc:
        size *= c
    flat = draw(st.lists(st.integers(lo, hi), min_size=size * n, max_size=size * n))
    it = iter(flat)
    return Game.from_function(sc, lambda _p: tuple(next(it) for _ in range(n)))


@st.composite
def blocks(draw, c: int, positive: bool = False):
    lo = 1 if positive else 0
    w = draw(st.lists(st.integers(lo, 64), min_size=c, max_size=c))
    if sum(w) == 0:
        w[0] = 1
    s = sum(w)
    return tuple(Fraction(a, s) for a in w)


@st.composite
def profiles_for(draw, g: Game, positive: bool = False) -> MixedProfile:
    return MixedProfile(tuple(draw(blocks(c, positive)) for c in g.strategy_counts))


@st.composite
def eps_below(draw, m: int) -> Fraction:
    den = draw(st.integers(2, 1000))
    return Fraction(draw(st.integers(1, den - 1)), den * m)


@st.composite
def game_profile_eps(draw):
    g = draw(games())
    return g, draw(profiles_for(g)), draw(eps_below(g.m))


# -- independent threshold oracle ---------------------------------------------------

def threshold_by_pieces(z, eps) -> Fraction:
    """Solve sum_j max(z_j - t, eps) = 1 by walking the linear pieces.

    f(t) = sum_j max(z_j - t, eps) is non-increasing and piecewise linear with
    kinks at z_j - eps.  On a piece where the set A of active coordinates
    (z_j - t > eps) is fixed, f(t) = sum_A z_j - |A| t + (m - |A|) eps.
    """
    z = [Fraction(v) for v in z]
    eps = Fraction(eps)
    m = len(z)
    kinks = sorted({v - eps for v in z}, reverse=True)
    # above the largest kink nothing is active and f = m * eps < 1
    for hi_kink in kinks:
        # candidate piece just below hi_kink: active set is z_j - eps >= hi_kink
        active = [v for v in z if v - eps >= hi_kink]
        k = len(active)
        t = (sum(active) + (m - k) * eps - 1) / k
        lower = max((v - eps for v in z if v - eps < hi_kink), default=None)
        if t <= hi_kink and (lower is None or t >= lower):
            return t
    raise AssertionError("no piece solves f(t) = 1")

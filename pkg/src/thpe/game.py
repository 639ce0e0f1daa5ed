"""Finite n-player games in strategic form and their equilibrium predicates.

Players and strategies are 0-based in the Python API; text formats use
1-based indices.  Pure profiles are enumerated lexicographically with the
last player's strategy varying fastest, which is also the order of the
``payoffs`` records in the game file.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, NamedTuple, Sequence


class ShapeError(ValueError):
    """A profile does not match the strategy counts of a game."""


class GameFormatError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class PureStrategy(NamedTuple):
    player: int
    strategy: int


_DYADIC = re.compile(r"^([+-]?\d+)/2\^(\d+)$")


def parse_rational(token: str) -> Fraction:
    """Parse ``p``, ``p/q``, ``p/2^e`` or a decimal literal such as ``1e-3``."""
    m = _DYADIC.match(token)
    if m:
        return Fraction(int(m.group(1)), 1 << int(m.group(2)))
    return Fraction(token)


def format_rational(q: Fraction) -> str:
    """Exact text for q; denominators that are powers of two print as ``p/2^e``."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    if d & (d - 1) == 0:
        return f"{q.numerator}/2^{d.bit_length() - 1}"
    return f"{q.numerator}/{d}"


@dataclass(frozen=True)
class Game:
    """Payoff table of a finite game.

    ``payoffs[k]`` holds the n payoffs of the k-th pure profile in
    lexicographic order (last player fastest).
    """

    strategy_counts: tuple[int, ...]
    payoffs: tuple[tuple[Fraction, ...], ...]
    _strides: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        counts = tuple(int(c) for c in self.strategy_counts)
        if len(counts) < 2:
            raise ValueError("a game needs at least two players")
        if any(c < 1 for c in counts):
            raise ValueError("every player needs at least one strategy")
        n = len(counts)
        table = tuple(tuple(Fraction(u) for u in row) for row in self.payoffs)
        if len(table) != math.prod(counts):
            raise ValueError(
                f"expected {math.prod(counts)} pure profiles, got {len(table)}")
        for row in table:
            if len(row) != n:
                raise ValueError(f"each pure profile needs {n} payoffs")
        strides = [1] * n
        for i in range(n - 2, -1, -1):
            strides[i] = strides[i + 1] * counts[i + 1]
        object.__setattr__(self, "strategy_counts", counts)
        object.__setattr__(self, "payoffs", table)
        object.__setattr__(self, "_strides", tuple(strides))

    @classmethod
    def from_function(cls, strategy_counts: Sequence[int], payoff) -> "Game":
        """Build a game from ``payoff(profile) -> sequence of n payoffs``."""
        counts = tuple(strategy_counts)
        rows = [tuple(payoff(p)) for p in itertools.product(*map(range, counts))]
        return cls(counts, tuple(rows))

    @classmethod
    def from_arrays(cls, arrays: Sequence) -> "Game":
        """One array per player, each of shape ``strategy_counts``."""
        import numpy as np

        arrs = [np.asarray(a) for a in arrays]
        counts = arrs[0].shape
        return cls.from_function(
            counts, lambda p: [Fraction(a[p].item()) for a in arrs])

    @property
    def n(self) -> int:
        return len(self.strategy_counts)

    @property
    def m(self) -> int:
        return sum(self.strategy_counts)

    @property
    def max_abs_payoff(self) -> Fraction:
        return max((abs(u) for row in self.payoffs for u in row), default=Fraction(0))

    @property
    def payoff_bound(self) -> int:
        """Integer B >= max |u| used by the quantitative bounds; at least 1."""
        return max(1, math.ceil(self.max_abs_payoff))

    def profiles(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*map(range, self.strategy_counts))

    def index(self, profile: Sequence[int]) -> int:
        return sum(j * s for j, s in zip(profile, self._strides))

    def payoff(self, profile: Sequence[int]) -> tuple[Fraction, ...]:
        return self.payoffs[self.index(profile)]

    def offsets(self) -> tuple[int, ...]:
        """Start of each player's block in the flat length-m vector."""
        return tuple(itertools.accumulate(self.strategy_counts, initial=0))[:-1]

    def pure_strategies(self) -> list[PureStrategy]:
        return [PureStrategy(i, j) for i, c in enumerate(self.strategy_counts)
                for j in range(c)]

    def permute_strategies(self, player: int, perm: Sequence[int]) -> "Game":
        """Relabel: new strategy j of ``player`` is old strategy ``perm[j]``."""
        def payoff(p):
            old = list(p)
            old[player] = perm[p[player]]
            return self.payoff(old)
        return Game.from_function(self.strategy_counts, payoff)


@dataclass(frozen=True)
class MixedProfile:
    """One probability vector per player; entries are exact rationals."""

    blocks: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        blocks = tuple(tuple(_to_fraction(p) for p in b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_flat(cls, strategy_counts: Sequence[int], values: Sequence) -> "MixedProfile":
        values = list(values)
        if len(values) != sum(strategy_counts):
            raise ShapeError(
                f"expected {sum(strategy_counts)} coordinates, got {len(values)}")
        blocks, k = [], 0
        for c in strategy_counts:
            blocks.append(values[k:k + c])
            k += c
        return cls(tuple(tuple(b) for b in blocks))

    @classmethod
    def uniform(cls, strategy_counts: Sequence[int]) -> "MixedProfile":
        return cls(tuple((Fraction(1, c),) * c for c in strategy_counts))

    @classmethod
    def pure(cls, strategy_counts: Sequence[int], choice: Sequence[int]) -> "MixedProfile":
        return cls(tuple(tuple(Fraction(int(j == a)) for j in range(c))
                         for c, a in zip(strategy_counts, choice)))

    @property
    def strategy_counts(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    @property
    def flat(self) -> tuple[Fraction, ...]:
        return tuple(p for b in self.blocks for p in b)

    def __getitem__(self, i: int) -> tuple[Fraction, ...]:
        return self.blocks[i]

    def is_valid(self, tol: Fraction = Fraction(0)) -> bool:
        return all(min(b) >= 0 and abs(sum(b) - 1) <= tol for b in self.blocks)

    def is_fully_mixed(self) -> bool:
        return all(p > 0 for b in self.blocks for p in b)

    def distance(self, other: "MixedProfile") -> Fraction:
        """l-infinity distance."""
        if self.strategy_counts != other.strategy_counts:
            raise ShapeError("profiles have different shapes")
        return max(abs(a - b) for a, b in zip(self.flat, other.flat))


def _to_fraction(p) -> Fraction:
    if isinstance(p, Fraction):
        return p
    to_fraction = getattr(p, "to_fraction", None)
    if to_fraction is not None:
        return to_fraction()
    return Fraction(p)


def _check_shape(g: Game, x: MixedProfile) -> None:
    if x.strategy_counts != g.strategy_counts:
        raise ShapeError(
            f"profile shape {x.strategy_counts} does not match game {g.strategy_counts}")


def expected_payoff(g: Game, x: MixedProfile, i: int) -> Fraction:
    _check_shape(g, x)
    total = Fraction(0)
    for profile, row in zip(g.profiles(), g.payoffs):
        if row[i] == 0:
            continue
        prob = Fraction(1)
        for k, j in enumerate(profile):
            prob *= x.blocks[k][j]
            if not prob:
                break
        total += prob * row[i]
    return total


def pure_response_payoffs(g: Game, x: MixedProfile) -> tuple[Fraction, ...]:
    """v(x): payoff of each pure strategy (i, j) against x_{-i}, flattened."""
    _check_shape(g, x)
    n = g.n
    blocks = [[Fraction(0)] * c for c in g.strategy_counts]
    for profile, row in zip(g.profiles(), g.payoffs):
        probs = [x.blocks[k][j] for k, j in enumerate(profile)]
        # prefix/suffix products give prod_{k != i} in O(n)
        prefix = [Fraction(1)] * (n + 1)
        for k in range(n):
            prefix[k + 1] = prefix[k] * probs[k]
        suffix = Fraction(1)
        for i in range(n - 1, -1, -1):
            u = row[i]
            if u:
                blocks[i][profile[i]] += u * prefix[i] * suffix
            suffix *= probs[i]
    return tuple(p for b in blocks for p in b)


def _split(g: Game, flat: Sequence) -> list[list]:
    out, k = [], 0
    for c in g.strategy_counts:
        out.append(list(flat[k:k + c]))
        k += c
    return out


def is_approx_nash(g: Game, x: MixedProfile, slack=Fraction(0)) -> bool:
    """No player gains more than ``slack`` by switching to a pure strategy."""
    slack = Fraction(slack)
    v = _split(g, pure_response_payoffs(g, x))
    for i in range(g.n):
        u = expected_payoff(g, x, i)
        if any(u < vij - slack for vij in v[i]):
            return False
    return True


@dataclass(frozen=True)
class CertificateEntry:
    player: int
    strategy: int
    probability: Fraction
    gap: Fraction
    exceeds_eps: bool


@dataclass(frozen=True)
class EpsPECertificate:
    """Per pure strategy evidence for (or against) an eps-perfect equilibrium."""

    eps: Fraction
    slack: Fraction
    entries: tuple[CertificateEntry, ...]
    fully_mixed: bool

    @property
    def valid(self) -> bool:
        return self.fully_mixed and all(
            e.gap <= self.slack for e in self.entries if e.exceeds_eps)

    def violations(self) -> list[CertificateEntry]:
        return [e for e in self.entries if e.exceeds_eps and e.gap > self.slack]


def build_certificate(g: Game, x: MixedProfile, eps, slack=Fraction(0)) -> EpsPECertificate:
    eps, slack = Fraction(eps), Fraction(slack)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if slack < 0:
        raise ValueError("slack must be nonnegative")
    v = _split(g, pure_response_payoffs(g, x))
    entries = []
    for i, block in enumerate(x.blocks):
        best = max(v[i])
        for j, p in enumerate(block):
            entries.append(CertificateEntry(i, j, p, best - v[i][j], p > eps))
    return EpsPECertificate(eps, slack, tuple(entries), x.is_fully_mixed())


def is_eps_pe(g: Game, x: MixedProfile, eps, slack=Fraction(0)) -> tuple[bool, EpsPECertificate]:
    """Fully mixed, and every strategy above ``eps`` is a best response up to ``slack``."""
    cert = build_certificate(g, x, eps, slack)
    if not x.is_fully_mixed():
        return False, cert
    v = _split(g, pure_response_payoffs(g, x))
    for i, block in enumerate(x.blocks):
        top = max(v[i])
        for j, p in enumerate(block):
            if p > cert.eps and v[i][j] < top - cert.slack:
                return False, cert
    return True, cert


# -- text format -------------------------------------------------------------

def _tokens(text: str) -> Iterator[tuple[str, int, int]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        for m in re.finditer(r"\S+", line):
            yield m.group(0), lineno, m.start() + 1


def parse_game(text: str) -> Game:
    toks = list(_tokens(text))
    last_line = max(1, len(text.splitlines()))
    pos = 0

    def take(what: str) -> tuple[str, int, int]:
        nonlocal pos
        if pos >= len(toks):
            raise GameFormatError(f"unexpected end of input, expected {what}", last_line, 1)
        tok = toks[pos]
        pos += 1
        return tok

    def keyword(word: str) -> None:
        tok, ln, col = take(f"'{word}'")
        if tok != word:
            raise GameFormatError(f"expected '{word}', found '{tok}'", ln, col)

    def integer(what: str, lo: int) -> int:
        tok, ln, col = take(what)
        try:
            val = int(tok)
        except ValueError:
            raise GameFormatError(f"expected {what}, found '{tok}'", ln, col) from None
        if val < lo:
            raise GameFormatError(f"{what} must be >= {lo}, found {val}", ln, col)
        return val

    keyword("players")
    n = integer("player count", 2)
    keyword("strategies")
    counts = [integer("strategy count", 1) for _ in range(n)]
    if pos < len(toks) and toks[pos][0] != "payoffs":
        tok, ln, col = toks[pos]
        raise GameFormatError(
            f"expected 'payoffs' after {n} strategy counts, found '{tok}'", ln, col)
    keyword("payoffs")
    needed = math.prod(counts) * n
    values = []
    for _ in range(needed):
        tok, ln, col = take(f"payoff ({len(values) + 1} of {needed})")
        try:
            values.append(parse_rational(tok))
        except (ValueError, ZeroDivisionError):
            raise GameFormatError(f"bad rational '{tok}'", ln, col) from None
    if pos < len(toks):
        tok, ln, col = toks[pos]
        raise GameFormatError(
            f"too many payoff tokens: expected {needed}, extra '{tok}'", ln, col)
    rows = tuple(tuple(values[k:k + n]) for k in range(0, needed, n))
    return Game(tuple(counts), rows)


def format_game(g: Game) -> str:
    lines = [f"players {g.n}",
             "strategies " + " ".join(map(str, g.strategy_counts)),
             "payoffs"]
    for row in g.payoffs:
        lines.append(" ".join(_plain_rational(u) for u in row))
    return "\n".join(lines) + "\n"


def _plain_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def read_game(path) -> Game:
    with open(path) as fh:
        return parse_game(fh.read())


# -- profile files -------------------------------------------------------------

def parse_profile(text: str) -> MixedProfile:
    """One line per player, whitespace-separated rationals."""
    blocks = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            blocks.append(tuple(parse_rational(t) for t in line.split()))
        except (ValueError, ZeroDivisionError):
            raise GameFormatError("bad rational in profile", lineno, 1) from None
    return MixedProfile(tuple(blocks))


def format_profile(x: MixedProfile, decimal: int | None = None) -> str:
    if decimal is None:
        fmt = format_rational
    else:
        fmt = lambda q: f"{float(q):.{decimal}f}"  # noqa: E731
    return "\n".join(" ".join(fmt(p) for p in b) for b in x.blocks) + "\n"


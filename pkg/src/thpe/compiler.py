"""The map F^eps of a game, as a reference function and as a circuit.

For a profile x let v(x) be the payoff of every pure strategy against the
other players and h = x + v(x).  Each player's block is shifted by the
unique t_i that makes ``sum_j max(h_ij - t_i, eps) == 1`` and clamped from
below at eps.  Fixed points with 0 < eps < 1/m are eps-perfect equilibria.
"""
from __future__ import annotations

import decimal
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from thpe.circuit import Circuit, CircuitBuilder, CircuitParseError, deserialize, serialize, \
    substitute_eps
from thpe.game import Game, MixedProfile, format_rational, parse_rational, pure_response_payoffs


class ParameterError(ValueError):
    pass


# -- sorting network -----------------------------------------------------------

@dataclass(frozen=True)
class SortingNetwork:
    """Comparator (a, b) writes the max to position a and the min to position b."""

    width: int
    comparators: tuple[tuple[int, int], ...]

    def apply(self, values: Sequence) -> list:
        out = list(values)
        for a, b in self.comparators:
            hi, lo = (out[a], out[b]) if out[a] >= out[b] else (out[b], out[a])
            out[a], out[b] = hi, lo
        return out


def batcher_network(width: int) -> SortingNetwork:
    """Batcher odd-even mergesort, descending; valid for any width."""
    comps = []
    p = 1
    while p < width:
        k = p
        while k >= 1:
            for j in range(k % p, width - k, 2 * k):
                for i in range(min(k, width - j - k)):
                    if (i + j) // (2 * p) == (i + j + k) // (2 * p):
                        comps.append((i + j, i + j + k))
            k //= 2
        p *= 2
    return SortingNetwork(width, tuple(comps))


# -- threshold -------------------------------------------------------------------

class ThresholdWitness(NamedTuple):
    t: Fraction
    prefix_length: int


def compute_threshold(z: Sequence, eps) -> ThresholdWitness:
    """t = max over l of (sum_{j<=l} z_j + (len(z) - l) * eps - 1) / l.

    ``z`` must be sorted in decreasing order.  When ``len(z) * eps < 1`` the
    result solves ``sum_j max(z_j - t, eps) == 1``.
    """
    z = [Fraction(v) for v in z]
    eps = Fraction(eps)
    if not z:
        raise ValueError("threshold of an empty vector")
    if any(z[k] < z[k + 1] for k in range(len(z) - 1)):
        raise ValueError("compute_threshold requires z sorted in decreasing order")
    m = len(z)
    best, arg, prefix = None, 0, Fraction(0)
    for l, zl in enumerate(z, start=1):
        prefix += zl
        cand = (prefix + (m - l) * eps - 1) / l
        if best is None or cand > best:
            best, arg = cand, l
    return ThresholdWitness(best, arg)


def check_eps(eps: Fraction, m: int) -> None:
    if eps <= 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    if eps * m >= 1:
        raise ParameterError(f"eps must be below 1/m = 1/{m}, got {eps}")


def reference_f_eps(g: Game, x: MixedProfile, eps) -> MixedProfile:
    eps = Fraction(eps)
    check_eps(eps, g.m)
    v = pure_response_payoffs(g, x)
    out, k = [], 0
    for block in x.blocks:
        y = [p + v[k + j] for j, p in enumerate(block)]
        k += len(block)
        t = compute_threshold(sorted(y, reverse=True), eps).t
        out.append(tuple(max(yj - t, eps) for yj in y))
    return MixedProfile(tuple(out))


# -- circuit compilation -----------------------------------------------------------

def _payoff_gates(b: CircuitBuilder, g: Game) -> list[int | None]:
    """Gates for v(x), flattened over (player, strategy); None where v is zero."""
    n = g.n
    v_terms: list[list[list[int]]] = [[[] for _ in range(c)] for c in g.strategy_counts]
    monomials: dict[tuple[int, ...], int] = {}
    for profile, row in zip(g.profiles(), g.payoffs):
        for i in range(n):
            u = row[i]
            if not u:
                continue
            factors = tuple(b.x(k, profile[k]) for k in range(n) if k != i)
            mono = monomials.get(factors)
            if mono is None:
                mono = b.reduce("mul", factors)
                monomials[factors] = mono
            term = mono if u == 1 else b.mul(b.const(u), mono)
            v_terms[i][profile[i]].append(term)
    return [b.reduce("add", terms) if terms else None
            for block in v_terms for terms in block]


def compile_f_eps(g: Game) -> Circuit:
    """Circuit with inputs x (length m) and eps computing ``reference_f_eps``."""
    b = CircuitBuilder(g.strategy_counts, has_eps=True)
    v = _payoff_gates(b, g)
    eps = b.eps
    k = 0
    for i, c in enumerate(g.strategy_counts):
        if c == 1:
            b.output((i, 0), b.max(b.const(1), eps))
            k += 1
            continue
        y = [b.x(i, j) if v[k + j] is None else b.add(b.x(i, j), v[k + j])
             for j in range(c)]
        k += c
        z = list(y)
        for a, bpos in batcher_network(c).comparators:
            z[a], z[bpos] = b.max(z[a], z[bpos]), b.min(z[a], z[bpos])
        one = b.const(1)
        candidates = []
        prefix = None
        for l in range(1, c + 1):
            prefix = z[0] if prefix is None else b.add(prefix, z[l - 1])
            acc = prefix
            if c - l == 1:
                acc = b.add(acc, eps)
            elif c - l > 1:
                acc = b.add(acc, b.mul(b.const(c - l), eps))
            acc = b.sub(acc, one)
            if l > 1:
                acc = b.mul(b.const(Fraction(1, l)), acc)
            candidates.append(acc)
        t = b.reduce("max", candidates)
        for j in range(c):
            b.output((i, j), b.max(b.sub(y[j], t), eps))
    return b.build()


# -- virtual infinitesimal -----------------------------------------------------------

def squaring_count(n: int, m: int, c=Fraction(1)) -> int:
    """Exact ceil(c * m**3 * log2(n))."""
    c = Fraction(c)
    if c <= 0:
        raise ParameterError("c must be positive")
    if n < 1:
        raise ParameterError("n must be positive")
    if n == 1:
        return 0
    coeff = c * m ** 3
    if n & (n - 1) == 0:
        return math.ceil(coeff * (n.bit_length() - 1))
    # log2 n is irrational here, so coeff * log2 n is never an integer and
    # enough digits always separate it from its ceiling
    digits = 40
    while True:
        with decimal.localcontext() as ctx:
            ctx.prec = digits
            val = (decimal.Decimal(coeff.numerator) / coeff.denominator
                   * decimal.Decimal(n).ln() / decimal.Decimal(2).ln())
            err = abs(val) * decimal.Decimal(10) ** (5 - digits)
            lo, hi = math.floor(val - err), math.floor(val + err)
        if lo == hi:
            return lo + 1
        digits *= 2


def eps_star_base(delta, B: int) -> Fraction:
    delta = Fraction(delta)
    if delta <= 0:
        raise ParameterError("delta must be positive")
    if B < 1:
        raise ParameterError("B must be a positive integer")
    return min(delta / 2, Fraction(1, B))


def compile_eps_star(delta, B: int, n: int, m: int, c=Fraction(1)) -> Circuit:
    """Constant circuit: min(delta/2, 1/B) squared ceil(c m^3 lg n) times."""
    base = eps_star_base(delta, B)
    if n < 2 or m < 2:
        raise ParameterError("eps* needs n >= 2 and m >= 2")
    b = CircuitBuilder((), has_eps=False)
    ref = b.const(base)
    for _ in range(squaring_count(n, m, c)):
        ref = b.mul(ref, ref)
    b.output("eps_star", ref)
    return b.build()


# -- FIXP instances --------------------------------------------------------------------

class Inequality(NamedTuple):
    coeffs: tuple[Fraction, ...]
    relation: str  # "<=" or "=="
    rhs: Fraction


@dataclass(frozen=True)
class FixpInstance:
    """Polytope of profiles and a closed circuit mapping it to itself.

    The output map is the identity: every coordinate is reported as is.
    """

    strategy_counts: tuple[int, ...]
    constraints: tuple[Inequality, ...]
    circuit: Circuit

    @property
    def dimension(self) -> int:
        return sum(self.strategy_counts)

    @property
    def output_map(self) -> tuple[tuple[Fraction, Fraction, int], ...]:
        """(a_i, b_i, phi(i)) triples of the affine output map."""
        return tuple((Fraction(1), Fraction(0), i) for i in range(self.dimension))

    def contains(self, point: Sequence) -> bool:
        for ineq in self.constraints:
            lhs = sum(a * Fraction(p) for a, p in zip(ineq.coeffs, point))
            if ineq.relation == "<=" and lhs > ineq.rhs:
                return False
            if ineq.relation == "==" and lhs != ineq.rhs:
                return False
        return True


def profile_polytope(strategy_counts: Sequence[int]) -> tuple[Inequality, ...]:
    m = sum(strategy_counts)
    out = []
    for k in range(m):
        coeffs = [Fraction(0)] * m
        coeffs[k] = Fraction(-1)
        out.append(Inequality(tuple(coeffs), "<=", Fraction(0)))
    start = 0
    for c in strategy_counts:
        coeffs = [Fraction(int(start <= k < start + c)) for k in range(m)]
        out.append(Inequality(tuple(coeffs), "==", Fraction(1)))
        start += c
    return tuple(out)


def emit_fixp_instance(g: Game, delta, c=Fraction(1)) -> FixpInstance:
    eps_circuit = compile_eps_star(delta, g.payoff_bound, g.n, g.m, c)
    closed = substitute_eps(compile_f_eps(g), eps_circuit)
    return FixpInstance(g.strategy_counts, profile_polytope(g.strategy_counts), closed)


def serialize_fixp(inst: FixpInstance) -> str:
    lines = [f"fixp {inst.dimension}", f"polytope {len(inst.constraints)}"]
    for ineq in inst.constraints:
        coeffs = " ".join(format_rational(a) for a in ineq.coeffs)
        lines.append(f"{coeffs} {ineq.relation} {format_rational(ineq.rhs)}")
    lines.append("circuit")
    return "\n".join(lines) + "\n" + serialize(inst.circuit)


def deserialize_fixp(text: str) -> FixpInstance:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("fixp "):
        raise CircuitParseError("expected 'fixp <dimension>' header", 1)
    try:
        dim = int(lines[0].split()[1])
        head = lines[1].split()
        if head[0] != "polytope":
            raise ValueError
        count = int(head[1])
    except (ValueError, IndexError):
        raise CircuitParseError("malformed fixp header", 2) from None
    constraints = []
    for k in range(count):
        lineno = 3 + k
        if lineno - 1 >= len(lines):
            raise CircuitParseError("truncated polytope section", lineno)
        toks = lines[lineno - 1].split()
        if len(toks) != dim + 2 or toks[dim] not in ("<=", "=="):
            raise CircuitParseError("expected '<coeffs> <= rhs' or '<coeffs> == rhs'", lineno)
        try:
            coeffs = tuple(parse_rational(t) for t in toks[:dim])
            rhs = parse_rational(toks[dim + 1])
        except (ValueError, ZeroDivisionError):
            raise CircuitParseError("bad coefficient", lineno) from None
        constraints.append(Inequality(coeffs, toks[dim], rhs))
    sep = 2 + count
    if sep >= len(lines) or lines[sep].strip() != "circuit":
        raise CircuitParseError("expected 'circuit' section", sep + 1)
    circuit = deserialize("\n".join(lines[sep + 1:]) + "\n")
    if circuit.m != dim:
        raise CircuitParseError("circuit inputs do not match polytope dimension", sep + 2)
    return FixpInstance(circuit.strategy_counts, tuple(constraints), circuit)

"""First-order real arithmetic formulas for (eps-)perfect equilibria.

Formulas are small immutable ASTs, printed as SMT-LIB 2 terms over the
sort Real.  Nothing here decides a formula with quantifiers; ground
(quantifier-free, fully substituted) formulas can be evaluated exactly.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Sequence, Union

from thpe.compiler import eps_star_base, squaring_count
from thpe.game import Game, format_rational

# -- AST ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: Fraction


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Add:
    args: tuple


@dataclass(frozen=True)
class Sub:
    left: object
    right: object


@dataclass(frozen=True)
class Mul:
    args: tuple


@dataclass(frozen=True)
class Cmp:
    op: str  # one of < <= = >= >
    left: object
    right: object


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class Forall:
    vars: tuple[str, ...]
    body: object


@dataclass(frozen=True)
class Exists:
    vars: tuple[str, ...]
    body: object


Term = Union[Const, Var, Add, Sub, Mul]
Formula = Union[Cmp, BoolConst, And, Or, Not, Forall, Exists]

CMP_OPS = ("<", "<=", "=", ">=", ">")


def conj(parts: Sequence) -> object:
    parts = tuple(parts)
    if not parts:
        return BoolConst(True)
    return parts[0] if len(parts) == 1 else And(parts)


def disj(parts: Sequence) -> object:
    parts = tuple(parts)
    if not parts:
        return BoolConst(False)
    return parts[0] if len(parts) == 1 else Or(parts)


def total(terms: Sequence) -> object:
    terms = tuple(terms)
    if not terms:
        return Const(Fraction(0))
    return terms[0] if len(terms) == 1 else Add(terms)


# -- traversal ------------------------------------------------------------------------

def children(f) -> tuple:
    if isinstance(f, (Const, Var, BoolConst)):
        return ()
    if isinstance(f, (Add, Mul, And, Or)):
        return f.args
    if isinstance(f, (Sub, Cmp)):
        return (f.left, f.right)
    if isinstance(f, Not):
        return (f.arg,)
    if isinstance(f, (Forall, Exists)):
        return (f.body,)
    raise TypeError(f"not a formula node: {f!r}")


def walk(f) -> Iterator:
    yield f
    for c in children(f):
        yield from walk(c)


def degree(term) -> int:
    """Total degree of a polynomial term."""
    if isinstance(term, Const):
        return 0
    if isinstance(term, Var):
        return 1
    if isinstance(term, Add):
        return max(degree(a) for a in term.args)
    if isinstance(term, Sub):
        return max(degree(term.left), degree(term.right))
    if isinstance(term, Mul):
        return sum(degree(a) for a in term.args)
    raise TypeError(f"not a polynomial term: {term!r}")


def max_atom_degree(f) -> int:
    return max((max(degree(n.left), degree(n.right)) for n in walk(f) if isinstance(n, Cmp)),
               default=0)


def free_vars(f, bound: frozenset = frozenset()) -> list[str]:
    """Free variable names in order of first occurrence."""
    seen: dict[str, None] = {}

    def go(node, bound):
        if isinstance(node, Var):
            if node.name not in bound:
                seen.setdefault(node.name)
        elif isinstance(node, (Forall, Exists)):
            go(node.body, bound | set(node.vars))
        else:
            for c in children(node):
                go(c, bound)

    go(f, bound)
    return list(seen)


def quantifier_blocks(f) -> list[tuple[str, int]]:
    """Leading quantifier prefix, adjacent same-kind quantifiers merged."""
    blocks: list[tuple[str, int]] = []
    while isinstance(f, (Forall, Exists)):
        kind = "forall" if isinstance(f, Forall) else "exists"
        if blocks and blocks[-1][0] == kind:
            blocks[-1] = (kind, blocks[-1][1] + len(f.vars))
        else:
            blocks.append((kind, len(f.vars)))
        f = f.body
    return blocks


def is_quantifier_free(f) -> bool:
    return not any(isinstance(n, (Forall, Exists)) for n in walk(f))


def coefficients(f) -> list[Fraction]:
    return [n.value for n in walk(f) if isinstance(n, Const)]


def bitsize(q: Fraction) -> int:
    """max(ceil(log2 |p|), ceil(log2 q)) for q = p/q; powers of two 2^t give |t|."""
    q = Fraction(q)
    if q == 0:
        return 0
    return max((abs(q.numerator) - 1).bit_length(), (q.denominator - 1).bit_length())


# -- evaluation -------------------------------------------------------------------------

def evaluate(f, env: Mapping[str, Fraction]):
    """Exact value of a ground term (Fraction) or formula (bool)."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Var):
        try:
            return Fraction(env[f.name])
        except KeyError:
            raise KeyError(f"unbound variable {f.name}") from None
    if isinstance(f, Add):
        return sum((evaluate(a, env) for a in f.args), Fraction(0))
    if isinstance(f, Sub):
        return evaluate(f.left, env) - evaluate(f.right, env)
    if isinstance(f, Mul):
        out = Fraction(1)
        for a in f.args:
            out *= evaluate(a, env)
        return out
    if isinstance(f, Cmp):
        a, b = evaluate(f.left, env), evaluate(f.right, env)
        return {"<": a < b, "<=": a <= b, "=": a == b, ">=": a >= b, ">": a > b}[f.op]
    if isinstance(f, BoolConst):
        return f.value
    if isinstance(f, And):
        return all(evaluate(a, env) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate(a, env) for a in f.args)
    if isinstance(f, Not):
        return not evaluate(f.arg, env)
    raise ValueError("cannot evaluate a quantified formula; use an external solver")


# -- emitters ---------------------------------------------------------------------------

def var_name(prefix: str, i: int, j: int) -> str:
    return f"{prefix}{i + 1}_{j + 1}"


def profile_env(g: Game, flat: Sequence, prefix: str = "x") -> dict[str, Fraction]:
    env, k = {}, 0
    for i, c in enumerate(g.strategy_counts):
        for j in range(c):
            env[var_name(prefix, i, j)] = Fraction(flat[k])
            k += 1
    return env


def pure_payoff_poly(g: Game, i: int, k: int, prefix: str = "x"):
    """R_i(x \\ k): payoff polynomial of pure strategy k of player i."""
    terms = []
    for profile, row in zip(g.profiles(), g.payoffs):
        if profile[i] != k or row[i] == 0:
            continue
        factors = [Var(var_name(prefix, j, a)) for j, a in enumerate(profile) if j != i]
        terms.append(Mul((Const(row[i]), *factors)))
    return total(terms)


def _vars(g: Game, prefix: str) -> tuple[str, ...]:
    return tuple(var_name(prefix, i, j) for i, c in enumerate(g.strategy_counts)
                 for j in range(c))


def squared_distance(g: Game, a: str, b: str):
    return total([Mul((Sub(Var(u), Var(v)), Sub(Var(u), Var(v))))
                  for u, v in zip(_vars(g, a), _vars(g, b))])


def emit_eps_pe(g: Game, prefix: str = "x", eps: str = "eps", prune: bool = True):
    """Quantifier-free formula: x is an eps-perfect equilibrium.

    With ``prune`` the always-true clauses for k == l are left out.
    """
    positive = [Cmp(">", Var(v), Const(Fraction(0))) for v in _vars(g, prefix)]
    sums = [Cmp("=", total([Var(var_name(prefix, i, j)) for j in range(c)]),
                Const(Fraction(1)))
            for i, c in enumerate(g.strategy_counts)]
    clauses = []
    for i, c in enumerate(g.strategy_counts):
        polys = [pure_payoff_poly(g, i, k, prefix) for k in range(c)]
        for k in range(c):
            for l in range(c):
                if prune and k == l:
                    continue
                clauses.append(Or((Cmp(">=", polys[k], polys[l]),
                                   Cmp("<=", Var(var_name(prefix, i, k)), Var(eps)))))
    return conj(positive + sums + clauses)


def emit_pe(g: Game, prefix: str = "x", inner: str = "y", eps: str = "e",
            prune: bool = True):
    """x is a perfect equilibrium, in prenex form: forall eps exists y."""
    body = Or((Cmp("<=", Var(eps), Const(Fraction(0))),
               And((emit_eps_pe(g, inner, eps, prune),
                    Cmp("<", squared_distance(g, prefix, inner), Var(eps))))))
    return Forall((eps,), Exists(_vars(g, inner), body))


def emit_pe_bound(g: Game, delta, prune: bool = True):
    """Every eps-PE lies within delta (l2) of a PE; free variable ``eps``.

    Prenex form with quantifier blocks of sizes m, m, 1, m.
    """
    delta = Fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    pe = emit_pe(g, "y", "z", "e", prune)
    pe_matrix = pe.body.body
    matrix = And((Cmp(">", Var("eps"), Const(Fraction(0))),
                  Or((Not(emit_eps_pe(g, "x", "eps", prune)),
                      And((pe_matrix,
                           Cmp("<", squared_distance(g, "x", "y"), Const(delta * delta))))))))
    return Forall(_vars(g, "x"), Exists(_vars(g, "y"),
                                       Forall(("e",), Exists(_vars(g, "z"), matrix))))


# -- SMT-LIB text --------------------------------------------------------------------------

def _const_text(q: Fraction) -> str:
    mag = abs(q)
    body = str(mag.numerator) if mag.denominator == 1 else f"(/ {mag.numerator} {mag.denominator})"
    return f"(- {body})" if q < 0 else body


def to_smt(f) -> str:
    if isinstance(f, Const):
        return _const_text(f.value)
    if isinstance(f, Var):
        return f.name
    if isinstance(f, BoolConst):
        return "true" if f.value else "false"
    if isinstance(f, Add):
        return "(+ " + " ".join(map(to_smt, f.args)) + ")"
    if isinstance(f, Mul):
        return "(* " + " ".join(map(to_smt, f.args)) + ")"
    if isinstance(f, Sub):
        return f"(- {to_smt(f.left)} {to_smt(f.right)})"
    if isinstance(f, Cmp):
        return f"({f.op} {to_smt(f.left)} {to_smt(f.right)})"
    if isinstance(f, And):
        return "(and " + " ".join(map(to_smt, f.args)) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(map(to_smt, f.args)) + ")"
    if isinstance(f, Not):
        return f"(not {to_smt(f.arg)})"
    if isinstance(f, (Forall, Exists)):
        kw = "forall" if isinstance(f, Forall) else "exists"
        decls = " ".join(f"({v} Real)" for v in f.vars)
        return f"({kw} ({decls}) {to_smt(f.body)})"
    raise TypeError(f"not a formula node: {f!r}")


def smt2_script(f, comment: str | None = None) -> str:
    logic = "QF_NRA" if is_quantifier_free(f) else "NRA"
    lines = []
    if comment:
        lines.extend(f"; {ln}" for ln in comment.splitlines())
    lines.append(f"(set-logic {logic})")
    lines.extend(f"(declare-fun {v} () Real)" for v in free_vars(f))
    lines.append(f"(assert {to_smt(f)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


class SmtParseError(ValueError):
    pass


_TOKEN = re.compile(r"\(|\)|;[^\n]*|[^\s()]+")


def _sexprs(text: str) -> list:
    stack: list[list] = [[]]
    for m in _TOKEN.finditer(text):
        tok = m.group(0)
        if tok.startswith(";"):
            continue
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise SmtParseError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SmtParseError("unbalanced '('")
    return stack[0]


_NUMERAL = re.compile(r"^\d+(\.\d+)?$")


def _term(sx):
    if isinstance(sx, str):
        if _NUMERAL.match(sx):
            return Const(Fraction(sx))
        if sx == "true":
            return BoolConst(True)
        if sx == "false":
            return BoolConst(False)
        return Var(sx)
    if not sx:
        raise SmtParseError("empty application")
    head, args = sx[0], sx[1:]
    if head == "/" and len(args) == 2 and all(isinstance(a, str) and _NUMERAL.match(a)
                                               for a in args):
        return Const(Fraction(args[0]) / Fraction(args[1]))
    if head in ("forall", "exists"):
        if len(args) != 2:
            raise SmtParseError(f"{head} takes a binder list and a body")
        names = []
        for decl in args[0]:
            if not (isinstance(decl, list) and len(decl) == 2 and decl[1] == "Real"):
                raise SmtParseError(f"bad binder {decl!r}")
            names.append(decl[0])
        body = _term(args[1])
        return (Forall if head == "forall" else Exists)(tuple(names), body)
    parsed = [_term(a) for a in args]
    if head == "-":
        if len(parsed) == 1 and isinstance(parsed[0], Const):
            return Const(-parsed[0].value)
        if len(parsed) == 2:
            return Sub(parsed[0], parsed[1])
        raise SmtParseError("'-' takes one numeral or two terms")
    if head == "+":
        return Add(tuple(parsed))
    if head == "*":
        return Mul(tuple(parsed))
    if head in CMP_OPS:
        if len(parsed) != 2:
            raise SmtParseError(f"{head} takes two arguments")
        return Cmp(head, parsed[0], parsed[1])
    if head == "and":
        return And(tuple(parsed))
    if head == "or":
        return Or(tuple(parsed))
    if head == "not" and len(parsed) == 1:
        return Not(parsed[0])
    raise SmtParseError(f"unsupported operator {head!r}")


def parse_smt(text: str):
    """Parse a single SMT-LIB term."""
    sx = _sexprs(text)
    if len(sx) != 1:
        raise SmtParseError(f"expected one term, found {len(sx)}")
    return _term(sx[0])


def parse_smt2_script(text: str):
    """The conjunction of all assertions in a script."""
    asserts = []
    for cmd in _sexprs(text):
        if not isinstance(cmd, list) or not cmd:
            raise SmtParseError(f"unexpected top-level token {cmd!r}")
        if cmd[0] == "assert":
            asserts.append(_term(cmd[1]))
        elif cmd[0] not in ("set-logic", "declare-fun", "declare-const", "check-sat",
                            "set-info", "set-option", "exit"):
            raise SmtParseError(f"unsupported command {cmd[0]!r}")
    return conj(asserts)


# -- quantitative bound ----------------------------------------------------------------------

def _clog2(q: Fraction) -> int:
    """ceil(log2 q) for q > 0."""
    q = Fraction(q)
    # 2**(e-1) < q < 2**(e+1)
    e = q.numerator.bit_length() - q.denominator.bit_length()
    return e if Fraction(2) ** e >= q else e + 1


def _exact_log2(q: Fraction) -> int | None:
    q = Fraction(q)
    if q.numerator & (q.numerator - 1) == 0 and q.denominator & (q.denominator - 1) == 0:
        return (q.numerator.bit_length() - 1) - (q.denominator.bit_length() - 1)
    return None


@dataclass(frozen=True)
class BoundReport:
    """log2(1/eps*) for eps* = min(delta/2, 1/B) ** (2 ** squarings), never eps* itself."""

    n: int
    m: int
    B: int
    delta: Fraction
    c: Fraction
    squarings: int
    base: Fraction
    log2_inv_base: int | None
    log2_inv_eps_star: int | None
    max_degree: int
    coefficient_bitsize: int

    @property
    def degenerate(self) -> bool:
        return self.base >= 1

    @property
    def quantifier_blocks(self) -> tuple[int, ...]:
        return (self.m, self.m, 1, self.m)

    def log2_text(self) -> str:
        if self.degenerate:
            return "0"
        v = self.log2_inv_eps_star
        if v is not None:
            if v & (v - 1) == 0:
                return f"2^{v.bit_length() - 1}"
            return f"{self.log2_inv_base} * 2^{self.squarings}"
        return f"2^{self.squarings} * log2({format_rational(1 / self.base)})"

    def eps_star(self) -> Fraction:
        raise OverflowError("eps* is only reported through log2(1/eps*); "
                            f"log2(1/eps*) = {self.log2_text()}")

    def lines(self) -> list[str]:
        return [
            f"n = {self.n}",
            f"m = {self.m}",
            f"B = {self.B}",
            f"delta = {format_rational(self.delta)}",
            f"c = {format_rational(self.c)}",
            f"squarings = {self.squarings}",
            f"base = {format_rational(self.base)}",
            f"log2_inv_eps_star = {self.log2_text()}",
            f"degenerate = {'true' if self.degenerate else 'false'}",
            f"max_degree = {self.max_degree}",
            f"coefficient_bitsize = {self.coefficient_bitsize}",
            "quantifier_blocks = " + " ".join(map(str, self.quantifier_blocks)),
        ]

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"


def bound_report(n: int, m: int, B: int, delta, c=Fraction(1)) -> BoundReport:
    delta, c = Fraction(delta), Fraction(c)
    base = eps_star_base(delta, B)
    K = squaring_count(n, m, c)
    inv = _exact_log2(1 / base)
    exact = None if inv is None else inv << K
    k = max(0, _clog2(1 / (delta * delta)))
    tau = max(0, _clog2(Fraction(B)))
    return BoundReport(n, m, B, delta, c, K, base, inv, exact, max(2, n - 1), max(k, tau))


def parse_report(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out

"""Division-free algebraic circuits over {add, sub, mul, min, max} with rational constants.

References are ints into a single value array laid out as::

    [x_0, ..., x_{m-1}, (eps,) g_0, g_1, ...]

so gate ``k`` has reference ``n_inputs + k``.  A gate may only reference
inputs or earlier gates, which makes the gate list a topological order.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, NamedTuple, Sequence

from thpe.extfloat import ExtFloat, emax, emin

BINARY_OPS = ("add", "sub", "mul", "min", "max")


class CircuitError(ValueError):
    pass


class BindingError(CircuitError):
    """Input values do not match the circuit's input slots."""


class CircuitParseError(CircuitError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class Gate(NamedTuple):
    op: str
    left: int | None = None
    right: int | None = None
    value: Fraction | None = None


@dataclass(frozen=True)
class Circuit:
    strategy_counts: tuple[int, ...]
    has_eps: bool
    gates: tuple[Gate, ...]
    # key is (player, strategy), 0-based, or a name such as "eps_star"
    outputs: tuple[tuple[Hashable, int], ...]

    def __post_init__(self):
        limit = self.n_inputs
        for k, g in enumerate(self.gates):
            if g.op == "const":
                if g.value is None:
                    raise CircuitError(f"g{k}: constant without value")
            elif g.op in BINARY_OPS:
                for ref in (g.left, g.right):
                    if ref is None or not 0 <= ref < limit:
                        raise CircuitError(f"g{k}: operand {ref} is not an earlier node")
            else:
                raise CircuitError(f"g{k}: unknown op {g.op!r}")
            limit += 1
        for key, ref in self.outputs:
            if not 0 <= ref < limit:
                raise CircuitError(f"output {key}: reference {ref} out of range")

    @property
    def m(self) -> int:
        return sum(self.strategy_counts)

    @property
    def n_inputs(self) -> int:
        return self.m + int(self.has_eps)

    @property
    def eps_ref(self) -> int:
        if not self.has_eps:
            raise CircuitError("circuit has no eps input")
        return self.m

    @property
    def gate_count(self) -> int:
        return len(self.gates)

    def count(self, op: str) -> int:
        return sum(1 for g in self.gates if g.op == op)

    @property
    def depth(self) -> int:
        """Longest input-to-output path, counting binary gates."""
        d = [0] * self.n_inputs
        for g in self.gates:
            d.append(0 if g.op == "const" else 1 + max(d[g.left], d[g.right]))
        return max((d[ref] for _, ref in self.outputs), default=0)

    def output_keys(self) -> list[Hashable]:
        return [k for k, _ in self.outputs]


class CircuitBuilder:
    """Append-only construction with constant and structural sharing."""

    def __init__(self, strategy_counts: Sequence[int] = (), has_eps: bool = True):
        self.strategy_counts = tuple(strategy_counts)
        self.has_eps = has_eps
        self._offsets = []
        k = 0
        for c in self.strategy_counts:
            self._offsets.append(k)
            k += c
        self.n_inputs = k + int(has_eps)
        self.gates: list[Gate] = []
        self.outputs: list[tuple[Hashable, int]] = []
        self._memo: dict[tuple, int] = {}

    def x(self, player: int, strategy: int) -> int:
        if not 0 <= strategy < self.strategy_counts[player]:
            raise IndexError((player, strategy))
        return self._offsets[player] + strategy

    @property
    def eps(self) -> int:
        if not self.has_eps:
            raise CircuitError("circuit has no eps input")
        return self.n_inputs - 1

    def _emit(self, gate: Gate) -> int:
        key = (gate.op, gate.left, gate.right, gate.value)
        ref = self._memo.get(key)
        if ref is None:
            ref = self.n_inputs + len(self.gates)
            self.gates.append(gate)
            self._memo[key] = ref
        return ref

    def const(self, value) -> int:
        return self._emit(Gate("const", value=Fraction(value)))

    def op(self, op: str, a: int, b: int) -> int:
        if op not in BINARY_OPS:
            raise CircuitError(f"unknown op {op!r}")
        if op in ("add", "mul", "min", "max") and a > b:
            a, b = b, a  # commutative: canonical operand order improves sharing
        return self._emit(Gate(op, a, b))

    def add(self, a: int, b: int) -> int:
        return self.op("add", a, b)

    def sub(self, a: int, b: int) -> int:
        return self.op("sub", a, b)

    def mul(self, a: int, b: int) -> int:
        return self.op("mul", a, b)

    def min(self, a: int, b: int) -> int:
        return self.op("min", a, b)

    def max(self, a: int, b: int) -> int:
        return self.op("max", a, b)

    def reduce(self, op: str, refs: Sequence[int]) -> int:
        """Balanced binary tree of ``op`` over ``refs`` (depth ceil(log2 len))."""
        refs = list(refs)
        if not refs:
            raise CircuitError("cannot reduce an empty list")
        while len(refs) > 1:
            nxt = [self.op(op, refs[k], refs[k + 1]) for k in range(0, len(refs) - 1, 2)]
            if len(refs) % 2:
                nxt.append(refs[-1])
            refs = nxt
        return refs[0]

    def output(self, key: Hashable, ref: int) -> None:
        self.outputs.append((key, ref))

    def build(self) -> Circuit:
        return Circuit(self.strategy_counts, self.has_eps, tuple(self.gates),
                       tuple(self.outputs))


# -- evaluation ----------------------------------------------------------------

def _bind(c: Circuit, x: Sequence, eps) -> list:
    if len(x) != c.m:
        raise BindingError(f"expected {c.m} x inputs, got {len(x)}")
    vals = list(x)
    if c.has_eps:
        if eps is None:
            raise BindingError("circuit has an unbound eps input")
        vals.append(eps)
    elif eps is not None:
        raise BindingError("circuit has no eps input")
    return vals


def eval_exact(c: Circuit, x: Sequence, eps=None) -> list[Fraction]:
    """Exact rational evaluation; returns outputs in declaration order."""
    vals = _bind(c, [Fraction(v) for v in x], None if eps is None else Fraction(eps))
    for g in c.gates:
        op = g.op
        if op == "const":
            vals.append(g.value)
            continue
        a, b = vals[g.left], vals[g.right]
        if op == "add":
            vals.append(a + b)
        elif op == "sub":
            vals.append(a - b)
        elif op == "mul":
            vals.append(a * b)
        elif op == "min":
            vals.append(a if a <= b else b)
        else:
            vals.append(a if a >= b else b)
    return [vals[ref] for _, ref in c.outputs]


def eval_float(c: Circuit, x: Sequence, eps=None, precision_bits: int = 128) -> list[ExtFloat]:
    """Evaluate with every gate rounded to nearest at ``precision_bits``."""
    P = precision_bits
    conv = lambda v: ExtFloat.from_fraction(v, P)  # noqa: E731
    vals = _bind(c, [conv(v) for v in x], None if eps is None else conv(eps))
    for g in c.gates:
        op = g.op
        if op == "const":
            vals.append(conv(g.value))
            continue
        a, b = vals[g.left], vals[g.right]
        if op == "add":
            vals.append(a + b)
        elif op == "sub":
            vals.append(a - b)
        elif op == "mul":
            vals.append(a * b)
        elif op == "min":
            vals.append(emin(a, b))
        else:
            vals.append(emax(a, b))
    return [vals[ref] for _, ref in c.outputs]


# -- composition ---------------------------------------------------------------

def substitute_eps(c: Circuit, eps_circuit: Circuit) -> Circuit:
    """Replace the eps input of ``c`` by the single output of a constant circuit.

    The constant circuit's gates come first; ``c``'s gates follow with their
    references shifted.
    """
    if not c.has_eps:
        raise CircuitError("circuit has no eps input to substitute")
    if eps_circuit.m or eps_circuit.has_eps or len(eps_circuit.outputs) != 1:
        raise CircuitError("eps circuit must be a closed single-output circuit")
    m = c.m
    pre = len(eps_circuit.gates)
    eps_value_ref = eps_circuit.outputs[0][1]
    if eps_value_ref < 0 or eps_value_ref >= pre:
        raise CircuitError("eps circuit output must be a gate")
    # in the new layout gate k of the eps circuit sits at m + k

    def remap(ref: int) -> int:
        if ref < m:
            return ref
        if ref == m:
            return m + eps_value_ref
        return ref - 1 + pre

    gates = [Gate(g.op, None if g.left is None else m + g.left,
                  None if g.right is None else m + g.right, g.value)
             for g in eps_circuit.gates]
    for g in c.gates:
        if g.op == "const":
            gates.append(g)
        else:
            gates.append(Gate(g.op, remap(g.left), remap(g.right)))
    outputs = tuple((k, remap(r)) for k, r in c.outputs)
    return Circuit(c.strategy_counts, False, tuple(gates), outputs)


# -- text format -------------------------------------------------------------------

def _ref_name(c: Circuit, ref: int, offsets: list[int]) -> str:
    if ref < c.m:
        i = max(k for k, off in enumerate(offsets) if off <= ref)
        return f"x{i + 1}_{ref - offsets[i] + 1}"
    if c.has_eps and ref == c.m:
        return "eps"
    return f"g{ref - c.n_inputs}"


def _format_const(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def serialize(c: Circuit) -> str:
    offsets, k = [], 0
    for cnt in c.strategy_counts:
        offsets.append(k)
        k += cnt
    lines = [f"inputs {c.m}" + (" eps" if c.has_eps else "")]
    for k, g in enumerate(c.gates):
        if g.op == "const":
            lines.append(f"g{k} = const {_format_const(g.value)}")
        else:
            lines.append(f"g{k} = {g.op} {_ref_name(c, g.left, offsets)} "
                         f"{_ref_name(c, g.right, offsets)}")
    for key, ref in c.outputs:
        name = _ref_name(c, ref, offsets)
        if isinstance(key, tuple):
            lines.append(f"out {key[0] + 1} {key[1] + 1} {name}")
        else:
            lines.append(f"out {key} {name}")
    return "\n".join(lines) + "\n"


_GATE = re.compile(r"^g(\d+)\s*=\s*(\w+)\s+(\S+)(?:\s+(\S+))?$")
_XREF = re.compile(r"^x(\d+)_(\d+)$")
_GREF = re.compile(r"^g(\d+)$")
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def deserialize(text: str) -> Circuit:
    lines = [(n, ln.strip()) for n, ln in enumerate(text.splitlines(), start=1)]
    lines = [(n, ln) for n, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise CircuitParseError("empty circuit text", 1)
    lineno, header = lines[0]
    parts = header.split()
    if not (parts and parts[0] == "inputs" and len(parts) in (2, 3)
            and (len(parts) == 2 or parts[2] == "eps")):
        raise CircuitParseError("expected header 'inputs <m> [eps]'", lineno)
    try:
        m = int(parts[1])
    except ValueError:
        raise CircuitParseError(f"bad input count {parts[1]!r}", lineno) from None
    has_eps = len(parts) == 3

    raw_gates: list[tuple[int, str, tuple]] = []
    raw_outputs: list[tuple[int, Hashable, str]] = []
    xrefs: list[tuple[int, int, int]] = []
    for lineno, line in lines[1:]:
        if line.startswith("out "):
            toks = line.split()
            if len(toks) == 4:
                try:
                    key = (int(toks[1]) - 1, int(toks[2]) - 1)
                except ValueError:
                    raise CircuitParseError("bad output indices", lineno) from None
                if key[0] < 0 or key[1] < 0:
                    raise CircuitParseError("output indices are 1-based", lineno)
                raw_outputs.append((lineno, key, toks[3]))
                xrefs.append((lineno, key[0] + 1, key[1] + 1))
            elif len(toks) == 3 and _NAME.match(toks[1]):
                raw_outputs.append((lineno, toks[1], toks[2]))
            else:
                raise CircuitParseError("expected 'out <i> <j> <ref>' or 'out <name> <ref>'",
                                        lineno)
            continue
        if raw_outputs:
            raise CircuitParseError("gate after output section", lineno)
        mt = _GATE.match(line)
        if not mt:
            raise CircuitParseError(f"cannot parse gate line {line!r}", lineno)
        k = int(mt.group(1))
        if k != len(raw_gates):
            raise CircuitParseError(f"expected gate g{len(raw_gates)}, found g{k}", lineno)
        op, a, b = mt.group(2), mt.group(3), mt.group(4)
        if op == "const":
            if b is not None:
                raise CircuitParseError("const takes one operand", lineno)
            try:
                val = Fraction(a)
            except (ValueError, ZeroDivisionError):
                raise CircuitParseError(f"bad constant {a!r}", lineno) from None
            raw_gates.append((lineno, op, (val,)))
        elif op in BINARY_OPS:
            if b is None:
                raise CircuitParseError(f"{op} takes two operands", lineno)
            raw_gates.append((lineno, op, (a, b)))
        else:
            raise CircuitParseError(f"unknown op {op!r}", lineno)
        for tok in (a, b):
            if tok is not None:
                mx = _XREF.match(tok)
                if mx:
                    xrefs.append((lineno, int(mx.group(1)), int(mx.group(2))))

    counts = _infer_counts(m, xrefs)
    offsets, k = [], 0
    for cnt in counts:
        offsets.append(k)
        k += cnt
    n_inputs = m + int(has_eps)

    def resolve(tok: str, lineno: int, limit: int) -> int:
        mx = _XREF.match(tok)
        if mx:
            i, j = int(mx.group(1)) - 1, int(mx.group(2)) - 1
            if not (0 <= i < len(counts) and 0 <= j < counts[i]):
                raise CircuitParseError(f"unknown input {tok}", lineno)
            return offsets[i] + j
        if tok == "eps":
            if not has_eps:
                raise CircuitParseError("eps referenced but not declared", lineno)
            return m
        mg = _GREF.match(tok)
        if mg:
            g = int(mg.group(1))
            if g >= limit:
                raise CircuitParseError(f"reference {tok} is not an earlier gate", lineno)
            return n_inputs + g
        raise CircuitParseError(f"bad reference {tok!r}", lineno)

    gates = []
    for k, (lineno, op, args) in enumerate(raw_gates):
        if op == "const":
            gates.append(Gate("const", value=args[0]))
        else:
            gates.append(Gate(op, resolve(args[0], lineno, k), resolve(args[1], lineno, k)))
    outputs = tuple((key, resolve(tok, lineno, len(gates))) for lineno, key, tok in raw_outputs)
    return Circuit(counts, has_eps, tuple(gates), outputs)


def _infer_counts(m: int, xrefs: list[tuple[int, int, int]]) -> tuple[int, ...]:
    if m == 0:
        if xrefs:
            raise CircuitParseError("x reference in a circuit without inputs", xrefs[0][0])
        return ()
    top: dict[int, int] = {}
    for lineno, i, j in xrefs:
        if i < 1 or j < 1:
            raise CircuitParseError("input indices are 1-based", lineno)
        top[i] = max(top.get(i, 0), j)
    players = max(top, default=0)
    counts = tuple(top.get(i, 0) for i in range(1, players + 1))
    if 0 in counts or sum(counts) != m:
        raise CircuitParseError(
            f"cannot infer strategy counts for {m} inputs from references", 1)
    return counts

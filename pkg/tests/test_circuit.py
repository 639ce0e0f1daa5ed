from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import eps_point, games, profiles_for, eps_below, weak_dominance
from thpe.circuit import (BindingError, Circuit, CircuitBuilder, CircuitError, CircuitParseError,
                          Gate, deserialize, eval_exact, eval_float, serialize, substitute_eps)
from thpe.compiler import compile_f_eps
from thpe.extfloat import ExtFloat

small = st.fractions(min_value=-8, max_value=8, max_denominator=50)
OPS = {"add": lambda a, b: a + b, "sub": lambda a, b: a - b, "mul": lambda a, b: a * b,
       "min": min, "max": max}


@given(st.sampled_from(sorted(OPS)), small, small)
def test_each_gate_matches_rational_arithmetic(op, a, b):
    bld = CircuitBuilder((2,), has_eps=False)
    bld.output((0, 0), bld.op(op, bld.x(0, 0), bld.x(0, 1)))
    assert eval_exact(bld.build(), [a, b]) == [OPS[op](a, b)]


def test_small_examples():
    bld = CircuitBuilder((1,), has_eps=False)
    bld.output((0, 0), bld.max(bld.x(0, 0), bld.const(0)))
    assert eval_exact(bld.build(), [Fraction(-3, 7)]) == [0]

    bld = CircuitBuilder((), has_eps=True)
    bld.output("sq", bld.mul(bld.eps, bld.eps))
    assert eval_exact(bld.build(), [], Fraction(1, 4)) == [Fraction(1, 16)]


def test_compiled_circuit_returns_the_fixed_point():
    eps = Fraction(1, 8)
    x = eps_point(2, eps)
    assert eval_exact(compile_f_eps(weak_dominance()), x.flat, eps) == list(x.flat)


def test_binding_errors():
    c = compile_f_eps(weak_dominance())
    with pytest.raises(BindingError):
        eval_exact(c, [1, 0, 1, 0])
    with pytest.raises(BindingError):
        eval_exact(c, [1, 0, 1], Fraction(1, 8))
    bld = CircuitBuilder((1,), has_eps=False)
    bld.output((0, 0), bld.x(0, 0))
    with pytest.raises(BindingError):
        eval_exact(bld.build(), [1], Fraction(1, 8))


def test_squaring_chain_keeps_exact_power_of_two():
    bld = CircuitBuilder((), has_eps=False)
    ref = bld.const(Fraction(1, 4))
    for _ in range(343):
        ref = bld.mul(ref, ref)
    bld.output("v", ref)
    c = bld.build()
    assert c.count("mul") == 343 and c.depth == 343
    (v,) = eval_float(c, [], precision_bits=64)
    assert (v.sign, v.significand, v.exponent) == (1, 1, -(2 ** 344))


@given(st.data())
def test_float_equals_exact_when_nothing_rounds(data):
    # dyadic inputs with few bits, add/sub/max/min only: every value fits in 64 bits
    g = data.draw(games(players=(2,), counts=(2, 3)))
    bld = CircuitBuilder(g.strategy_counts, has_eps=False)
    refs = [bld.x(i, j) for i, c in enumerate(g.strategy_counts) for j in range(c)]
    for _ in range(data.draw(st.integers(1, 12))):
        op = data.draw(st.sampled_from(["add", "sub", "min", "max"]))
        refs.append(bld.op(op, data.draw(st.sampled_from(refs)), data.draw(st.sampled_from(refs))))
    bld.output((0, 0), refs[-1])
    c = bld.build()
    x = [Fraction(data.draw(st.integers(-256, 256)), 16) for _ in range(c.m)]
    assert [v.to_fraction() for v in eval_float(c, x, precision_bits=64)] == eval_exact(c, x)


# -- error growth on tree circuits ---------------------------------------------------

leaf = st.builds(Fraction, st.integers(1, 1000), st.integers(1, 1000))
trees = st.recursive(
    leaf,
    lambda kids: st.tuples(st.sampled_from(["add", "mul", "min", "max"]), kids, kids),
    max_leaves=24)


def _build_tree(bld: CircuitBuilder, node, leaves: list) -> int:
    if isinstance(node, Fraction):
        leaves.append(node)
        return bld.x(0, len(leaves) - 1)
    op, a, b = node
    return bld.op(op, _build_tree(bld, a, leaves), _build_tree(bld, b, leaves))


def _count_leaves(node) -> int:
    return 1 if isinstance(node, Fraction) else _count_leaves(node[1]) + _count_leaves(node[2])


@settings(max_examples=200)
@given(trees)
def test_relative_error_grows_at_most_linearly_in_gates(tree):
    width = _count_leaves(tree)
    bld = CircuitBuilder((width,), has_eps=False)
    leaves: list = []
    bld.output((0, 0), _build_tree(bld, tree, leaves))
    c = bld.build()
    gates = max(1, c.gate_count)
    (exact,) = eval_exact(c, leaves)
    (lo,) = eval_float(c, leaves, precision_bits=128)
    (hi,) = eval_float(c, leaves, precision_bits=256)
    bound = Fraction(2) ** (1 - 128) * gates
    assert abs(lo.to_fraction() - exact) <= bound * exact
    assert abs(lo.to_fraction() - hi.to_fraction()) <= bound * abs(hi.to_fraction())


# -- structure -------------------------------------------------------------------------

def test_gate_count_and_depth_on_hand_built_circuit():
    bld = CircuitBuilder((3,), has_eps=True)
    s = bld.add(bld.x(0, 0), bld.x(0, 1))
    t = bld.mul(s, bld.x(0, 2))
    u = bld.max(t, bld.const(1))
    bld.output((0, 0), u)
    bld.output((0, 1), s)
    c = bld.build()
    assert c.gate_count == 4
    assert c.depth == 3
    assert c.count("const") == 1


def test_builder_shares_identical_gates():
    bld = CircuitBuilder((2,), has_eps=False)
    a = bld.add(bld.x(0, 0), bld.x(0, 1))
    assert bld.add(bld.x(0, 1), bld.x(0, 0)) == a
    assert bld.sub(bld.x(0, 0), bld.x(0, 1)) != bld.sub(bld.x(0, 1), bld.x(0, 0))
    assert bld.const(Fraction(1, 2)) == bld.const(Fraction(2, 4))


def test_balanced_reduce_has_logarithmic_depth():
    bld = CircuitBuilder((16,), has_eps=False)
    bld.output((0, 0), bld.reduce("add", [bld.x(0, j) for j in range(16)]))
    c = bld.build()
    assert (c.gate_count, c.depth) == (15, 4)


def test_circuit_rejects_forward_and_unknown_operands():
    with pytest.raises(CircuitError):
        Circuit((1,), False, (Gate("add", 0, 2),), ())
    with pytest.raises(CircuitError):
        Circuit((1,), False, (Gate("div", 0, 0),), ())
    with pytest.raises(CircuitError):
        Circuit((1,), False, (), (((0, 0), 5),))


# -- text format ------------------------------------------------------------------------

def test_identity_circuit_is_two_lines():
    bld = CircuitBuilder((1,), has_eps=False)
    bld.output((0, 0), bld.x(0, 0))
    c = bld.build()
    text = serialize(c)
    assert text == "inputs 1\nout 1 1 x1_1\n"
    assert deserialize(text) == c


def test_serialized_header_and_refs():
    text = serialize(compile_f_eps(weak_dominance()))
    lines = text.splitlines()
    assert lines[0] == "inputs 4 eps"
    assert any(" eps" in ln for ln in lines[1:])
    assert lines[-1].startswith("out 2 2 g")


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_compiled_round_trip_preserves_evaluation(data):
    g = data.draw(games())
    c = compile_f_eps(g)
    back = deserialize(serialize(c))
    assert back == c
    assert serialize(back) == serialize(c)
    x = data.draw(profiles_for(g))
    eps = data.draw(eps_below(g.m))
    assert eval_exact(back, x.flat, eps) == eval_exact(c, x.flat, eps)


def test_round_trip_on_100_points_for_2x2():
    import random
    rng = random.Random(7)
    g = weak_dominance()
    c = compile_f_eps(g)
    back = deserialize(serialize(c))
    for _ in range(100):
        a, b = Fraction(rng.randint(0, 99), 99), Fraction(rng.randint(0, 99), 99)
        eps = Fraction(rng.randint(1, 99), 400)
        x = [a, 1 - a, b, 1 - b]
        assert eval_exact(back, x, eps) == eval_exact(c, x, eps)


@pytest.mark.parametrize("text, line", [
    ("inputs 1\ng0 = add x1_1 g1\ng1 = const 1/2\nout 1 1 g1\n", 2),
    ("inputs 1\ng1 = const 1/2\n", 2),
    ("inputs 1\ng0 = div x1_1 x1_1\n", 2),
    ("inputs 1\ng0 = add x1_1 eps\n", 2),
    ("inputs 1\ng0 = add x1_1\n", 2),
    ("input 1\n", 1),
    ("inputs 1\nout 1 1 x1_1\ng0 = const 1/2\n", 3),
    ("inputs 1\ng0 = const 1/0\n", 2),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(CircuitParseError) as info:
        deserialize(text)
    assert info.value.line == line


def test_substitute_eps_binds_the_constant():
    bld = CircuitBuilder((1,), has_eps=True)
    bld.output((0, 0), bld.add(bld.x(0, 0), bld.eps))
    c = bld.build()
    k = CircuitBuilder((), has_eps=False)
    half = k.const(Fraction(1, 2))
    k.output("eps_star", k.mul(half, half))
    closed = substitute_eps(c, k.build())
    assert not closed.has_eps
    assert eval_exact(closed, [Fraction(1, 3)]) == [Fraction(1, 3) + Fraction(1, 4)]
    assert deserialize(serialize(closed)) == closed


def test_eval_float_with_ext_inputs():
    c = compile_f_eps(weak_dominance())
    eps = Fraction(1, 8)
    x = [ExtFloat.from_fraction(v, 64) for v in eps_point(2, eps).flat]
    out = eval_float(c, x, ExtFloat.from_fraction(eps, 64), precision_bits=64)
    assert [v.to_fraction() for v in out] == list(eps_point(2, eps).flat)

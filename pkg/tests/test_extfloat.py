from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thpe.extfloat import ExtFloat, emax, emin

rationals = st.fractions(max_denominator=10 ** 30).filter(lambda q: abs(q) < 10 ** 30)
precisions = st.sampled_from([2, 8, 24, 53, 64, 113, 128])


def mpfr_round(q: Fraction, prec: int) -> Fraction:
    """Correctly rounded (nearest, ties to even) reference from MPFR."""
    ctx = gmpy2.context(precision=prec, round=gmpy2.RoundToNearest,
                        emin=-(1 << 30), emax=1 << 30)
    with gmpy2.context(ctx):
        v = gmpy2.mpfr(gmpy2.mpq(q.numerator, q.denominator))
        return Fraction(*v.as_integer_ratio())


def mpfr_op(op, a: Fraction, b: Fraction, prec: int) -> Fraction:
    ctx = gmpy2.context(precision=prec, round=gmpy2.RoundToNearest,
                        emin=-(1 << 30), emax=1 << 30)
    with gmpy2.context(ctx):
        x = gmpy2.mpfr(gmpy2.mpq(a.numerator, a.denominator), prec)
        y = gmpy2.mpfr(gmpy2.mpq(b.numerator, b.denominator), prec)
        return Fraction(*op(x, y).as_integer_ratio())


@given(rationals, precisions)
def test_from_fraction_matches_mpfr(q, prec):
    assert ExtFloat.from_fraction(q, prec).to_fraction() == mpfr_round(q, prec)


@given(rationals, rationals, precisions, st.sampled_from(["add", "sub", "mul"]))
def test_arithmetic_is_correctly_rounded(a, b, prec, name):
    x, y = ExtFloat.from_fraction(a, prec), ExtFloat.from_fraction(b, prec)
    ops = {"add": (lambda u, v: u + v), "sub": (lambda u, v: u - v),
           "mul": (lambda u, v: u * v)}
    got = ops[name](x, y).to_fraction()
    assert got == mpfr_op(ops[name], x.to_fraction(), y.to_fraction(), prec)


@given(st.floats(allow_nan=False, allow_infinity=False, min_value=-1e300, max_value=1e300),
       st.floats(allow_nan=False, allow_infinity=False, min_value=-1e300, max_value=1e300))
def test_double_precision_agrees_with_hardware_floats(a, b):
    x, y = ExtFloat.from_fraction(Fraction(a)), ExtFloat.from_fraction(Fraction(b))
    for got, want in ((x + y, a + b), (x - y, a - b)):
        assert float(got) == want
    prod = a * b
    if prod == 0 or 1e-300 < abs(prod) < 1e300:
        assert float(x * y) == prod


def test_ties_round_to_even():
    # 2**53 + 1 sits halfway between two doubles; the even one is 2**53
    assert ExtFloat.from_fraction(2 ** 53 + 1).to_fraction() == 2 ** 53
    assert ExtFloat.from_fraction(2 ** 53 + 3).to_fraction() == 2 ** 53 + 4
    assert ExtFloat.from_fraction(Fraction(5, 2), 2).to_fraction() == 2
    assert ExtFloat.from_fraction(Fraction(7, 2), 2).to_fraction() == 4


@given(st.integers(-(2 ** 70), 2 ** 70).filter(bool), st.integers(-(2 ** 70), 2 ** 70),
       st.integers(60, 400), precisions)
def test_far_apart_operands_match_mpfr(a, b, gap, prec):
    x = ExtFloat.from_fraction(a, prec)
    y = ExtFloat.from_fraction(Fraction(b, 2 ** gap), prec)
    want = mpfr_op(lambda u, v: u + v, x.to_fraction(), y.to_fraction(), prec)
    assert (x + y).to_fraction() == want
    assert (y + x).to_fraction() == want


def test_tiny_addend_does_not_move_a_value():
    one = ExtFloat.from_fraction(1, 8)
    tiny = ExtFloat(1, -1000, 8)
    assert (one + tiny).to_fraction() == 1
    assert (one - tiny).to_fraction() == 1


def test_unbounded_exponent_under_squaring():
    v = ExtFloat.from_fraction(Fraction(1, 4), 64)
    for _ in range(343):
        v = v * v
    assert v.sign == 1
    assert v.significand == 1
    assert v.exponent == -(2 ** 344)
    with pytest.raises(OverflowError):
        v.to_fraction()


def test_sign_and_significand():
    v = ExtFloat.from_fraction(Fraction(-3, 8))
    assert v.sign == -1
    assert v.significand == Fraction(3, 2)
    assert v.exponent == -2
    assert ExtFloat.from_fraction(0).sign == 0


@given(rationals, rationals)
def test_order_matches_exact_values(a, b):
    x, y = ExtFloat.from_fraction(a, 128), ExtFloat.from_fraction(b, 128)
    fx, fy = x.to_fraction(), y.to_fraction()
    assert (x < y) == (fx < fy)
    assert (x == y) == (fx == fy)
    assert emin(x, y).to_fraction() == min(fx, fy)
    assert emax(x, y).to_fraction() == max(fx, fy)


@given(st.integers(-(2 ** 200), 2 ** 200), st.integers(1, 200))
def test_scaled_int_is_exact_on_grid(k, bits):
    v = ExtFloat.from_fraction(Fraction(k, 2 ** bits), 256)
    assert v.scaled_int(bits) == k

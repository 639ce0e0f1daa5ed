"""Binary floating point with a fixed-width mantissa and an unbounded exponent.

A value is ``man * 2**exp`` where ``man`` is a signed Python int whose
magnitude has exactly ``prec`` bits (top bit set), or ``man == 0``.  Every
arithmetic result is rounded to nearest, ties to even, at ``prec`` bits.
The exponent is a plain int, so repeated squaring of 1/4 three hundred
times is still representable: nothing overflows or flushes to zero.
"""
from __future__ import annotations

import math
from fractions import Fraction

# Refuse to expand values whose binary exponent is beyond this into a
# positional Fraction; they would not fit in memory.
MAX_POSITIONAL_EXPONENT = 1 << 24


def _round(man: int, exp: int, prec: int) -> tuple[int, int]:
    """Normalize the exact value man * 2**exp to ``prec`` bits."""
    if man == 0:
        return 0, 0
    neg = man < 0
    mag = -man if neg else man
    shift = mag.bit_length() - prec
    if shift > 0:
        q = mag >> shift
        r = mag & ((1 << shift) - 1)
        half = 1 << (shift - 1)
        if r > half or (r == half and q & 1):
            q += 1
            if q.bit_length() > prec:
                q >>= 1
                shift += 1
        mag = q
    elif shift < 0:
        mag <<= -shift
    exp += shift
    return (-mag if neg else mag), exp


class ExtFloat:
    __slots__ = ("man", "exp", "prec")

    def __init__(self, man: int, exp: int = 0, prec: int = 53):
        if prec < 2:
            raise ValueError("precision must be at least 2 bits")
        self.man, self.exp = _round(int(man), int(exp), prec)
        self.prec = prec

    @classmethod
    def _raw(cls, man: int, exp: int, prec: int) -> "ExtFloat":
        obj = object.__new__(cls)
        obj.man = man
        obj.exp = exp
        obj.prec = prec
        return obj

    # -- conversions -------------------------------------------------------

    @classmethod
    def from_fraction(cls, value, prec: int = 53) -> "ExtFloat":
        """Round an int, Fraction or ExtFloat to the nearest ``prec``-bit value."""
        if isinstance(value, ExtFloat):
            return cls(value.man, value.exp, prec)
        q = Fraction(value)
        if q == 0:
            return cls._raw(0, 0, prec)
        num, den = abs(q.numerator), q.denominator
        # at least prec + 1 quotient bits, then one sticky bit for the remainder
        k = prec + 2 - (num.bit_length() - den.bit_length())
        if k >= 0:
            quo, rem = divmod(num << k, den)
        else:
            quo, rem = divmod(num, den << -k)
        mag = (quo << 1) | (rem != 0)
        man, exp = _round(-mag if q < 0 else mag, -k - 1, prec)
        return cls._raw(man, exp, prec)

    def to_fraction(self) -> Fraction:
        if self.man == 0:
            return Fraction(0)
        if abs(self.exp) > MAX_POSITIONAL_EXPONENT:
            raise OverflowError(
                f"exponent {self.exponent} too large to expand positionally")
        if self.exp >= 0:
            return Fraction(self.man << self.exp)
        return Fraction(self.man, 1 << -self.exp)

    def scaled_int(self, bits: int) -> int:
        """Nearest integer (ties to even) to ``self * 2**bits``."""
        if self.man == 0:
            return 0
        e = self.exp + bits
        if e >= 0:
            return self.man << e
        if -e > self.prec + 1:
            return 0
        neg = self.man < 0
        mag = -self.man if neg else self.man
        q = mag >> -e
        r = mag & ((1 << -e) - 1)
        half = 1 << (-e - 1)
        if r > half or (r == half and q & 1):
            q += 1
        return -q if neg else q

    def __float__(self) -> float:
        if self.man == 0:
            return 0.0
        top = self.exponent
        if top > 1100:
            return math.copysign(math.inf, self.man)
        if top < -1100:
            return math.copysign(0.0, self.man)
        return math.ldexp(float(self.man), self.exp)

    # -- inspection ----------------------------------------------------------

    @property
    def sign(self) -> int:
        return (self.man > 0) - (self.man < 0)

    @property
    def exponent(self) -> int:
        """Binary exponent e with value = sign * significand * 2**e."""
        if self.man == 0:
            return 0
        return self.exp + self.prec - 1

    @property
    def significand(self) -> Fraction:
        """Magnitude scaled into [1, 2)."""
        if self.man == 0:
            return Fraction(0)
        return Fraction(abs(self.man), 1 << (self.prec - 1))

    def is_zero(self) -> bool:
        return self.man == 0

    # -- arithmetic ----------------------------------------------------------

    def _coerce(self, other) -> "ExtFloat":
        if isinstance(other, ExtFloat):
            return other
        if isinstance(other, (int, Fraction)):
            return ExtFloat.from_fraction(other, self.prec)
        return NotImplemented

    def __add__(self, other) -> "ExtFloat":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        prec = max(self.prec, other.prec)
        a, b = self, other
        if a.man == 0:
            return ExtFloat(b.man, b.exp, prec)
        if b.man == 0:
            return ExtFloat(a.man, a.exp, prec)
        if a.exponent < b.exponent:
            a, b = b, a
        if a.exponent - b.exponent > prec + 2:
            # b sits below a quarter ulp of a; a sticky bit decides rounding
            sticky = 1 if b.man > 0 else -1
            widen = prec - a.prec + 3
            man, exp = _round((a.man << widen) + sticky, a.exp - widen, prec)
            return ExtFloat._raw(man, exp, prec)
        if a.exp >= b.exp:
            man = (a.man << (a.exp - b.exp)) + b.man
            exp = b.exp
        else:
            man = a.man + (b.man << (b.exp - a.exp))
            exp = a.exp
        man, exp = _round(man, exp, prec)
        return ExtFloat._raw(man, exp, prec)

    __radd__ = __add__

    def __neg__(self) -> "ExtFloat":
        return ExtFloat._raw(-self.man, self.exp, self.prec)

    def __abs__(self) -> "ExtFloat":
        return ExtFloat._raw(abs(self.man), self.exp, self.prec)

    def __sub__(self, other) -> "ExtFloat":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "ExtFloat":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other) -> "ExtFloat":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        prec = max(self.prec, other.prec)
        man, exp = _round(self.man * other.man, self.exp + other.exp, prec)
        return ExtFloat._raw(man, exp, prec)

    __rmul__ = __mul__

    # -- ordering ------------------------------------------------------------

    def _cmp(self, other: "ExtFloat") -> int:
        sa, sb = self.sign, other.sign
        if sa != sb:
            return (sa > sb) - (sa < sb)
        if sa == 0:
            return 0
        ea, eb = self.exponent, other.exponent
        if ea != eb:
            c = (ea > eb) - (ea < eb)
            return c if sa > 0 else -c
        # same top exponent: align mantissas to a common width
        ma, mb = abs(self.man), abs(other.man)
        if self.prec > other.prec:
            mb <<= self.prec - other.prec
        elif other.prec > self.prec:
            ma <<= other.prec - self.prec
        c = (ma > mb) - (ma < mb)
        return c if sa > 0 else -c

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._cmp(other) == 0

    def __lt__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._cmp(other) < 0

    def __le__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._cmp(other) <= 0

    def __gt__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._cmp(other) > 0

    def __ge__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._cmp(other) >= 0

    def __hash__(self) -> int:
        if abs(self.exp) <= 4096:
            return hash(self.to_fraction())
        return hash((self.man, self.exp))

    def __repr__(self) -> str:
        if self.man == 0:
            return f"ExtFloat(0, prec={self.prec})"
        sign = "-" if self.man < 0 else ""
        return (f"ExtFloat({sign}{float(self.significand)!r} * 2**{self.exponent}, "
                f"prec={self.prec})")


def emin(a: ExtFloat, b: ExtFloat) -> ExtFloat:
    return a if a <= b else b


def emax(a: ExtFloat, b: ExtFloat) -> ExtFloat:
    return a if a >= b else b

"""Certified rational enclosures for quantities that may be irrational.

A Value is a closed interval [lo, hi] guaranteed to contain the mathematical
quantity; lo == hi means the value is known exactly.  Roots are enclosed by
integer root extraction after decimal scaling, so enclosures are outward by
construction and perfect powers come back exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

DIGITS = 30


@dataclass(frozen=True)
class Value:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty enclosure [{self.lo}, {self.hi}]")

    @property
    def exact(self) -> bool:
        return self.lo == self.hi

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def __add__(self, other: "Value") -> "Value":
        return Value(self.lo + other.lo, self.hi + other.hi)

    def scale(self, t: Fraction) -> "Value":
        if t < 0:
            return Value(self.hi * t, self.lo * t)
        return Value(self.lo * t, self.hi * t)

    def __repr__(self):
        if self.exact:
            return f"Value({self.lo})"
        return f"Value({self.lo}, {self.hi})"


def exact(v) -> Value:
    v = Fraction(v)
    return Value(v, v)


def vmax(values) -> Value:
    values = list(values)
    return Value(max(v.lo for v in values), max(v.hi for v in values))


def mul_nonneg(a: Value, b: Value) -> Value:
    if a.lo < 0 or b.lo < 0:
        raise ValueError("mul_nonneg needs nonnegative enclosures")
    return Value(a.lo * b.lo, a.hi * b.hi)


def div_nonneg(a: Value, b: Value) -> Value:
    if a.lo < 0 or b.lo <= 0:
        raise ValueError("div_nonneg needs nonnegative numerator, positive denominator")
    return Value(a.lo / b.hi, a.hi / b.lo)


def _iroot(n: int, k: int) -> int:
    """floor(n ** (1/k)) for n >= 0, k >= 1, exactly."""
    if n < 0:
        raise ValueError("negative radicand")
    if k == 1 or n == 0:
        return n
    if k == 2:
        return math.isqrt(n)
    x = 1 << (-(-n.bit_length() // k) + 1)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    while x ** k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


def root_enclosure(t: Fraction, k: int, digits: int = DIGITS) -> Value:
    """Enclose t ** (1/k) for t >= 0; exact when t is a perfect k-th power."""
    t = Fraction(t)
    if t < 0:
        raise ValueError("negative radicand")
    if k == 1:
        return Value(t, t)
    rn = _iroot(t.numerator, k)
    rd = _iroot(t.denominator, k)
    if rn ** k == t.numerator and rd ** k == t.denominator:
        exact_root = Fraction(rn, rd)
        return Value(exact_root, exact_root)
    scale = 10 ** digits
    num = t * scale ** k
    n = num.numerator // num.denominator
    r = _iroot(n, k)
    return Value(Fraction(r, scale), Fraction(r + 1, scale))


def pow_enclosure(t: Fraction, p: Fraction, digits: int = DIGITS) -> Value:
    """Enclose t ** p for t >= 0 and rational p > 0."""
    t = Fraction(t)
    p = Fraction(p)
    if t < 0 or p <= 0:
        raise ValueError("pow_enclosure needs t >= 0, p > 0")
    powed = t ** p.numerator
    if p.denominator == 1:
        return Value(powed, powed)
    return root_enclosure(powed, p.denominator, digits)


def value_pow(v: Value, p: Fraction, digits: int = DIGITS) -> Value:
    """Enclose v ** p for a nonnegative enclosure and rational p > 0."""
    if v.lo < 0:
        raise ValueError("value_pow needs a nonnegative enclosure")
    return Value(pow_enclosure(v.lo, p, digits).lo, pow_enclosure(v.hi, p, digits).hi)

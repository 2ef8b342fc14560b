"""Real values carrying a relative-error bound."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import mpmath

#: unit roundoff of IEEE double
EPS = 2.0 ** -53

# private context, never mutated after import, so sharing it across threads is safe
MP = mpmath.MPContext()
MP.dps = 40
MP_REL_ERROR = 1e-30


def is_exact_number(x) -> bool:
    return isinstance(x, Rational)


def to_float(x) -> float:
    if isinstance(x, float):
        return x
    return float(x)


@dataclass(frozen=True)
class ApproxReal:
    """A real ``value`` whose relative error is at most ``rel_error``.

    Exact values are held as ``int`` or ``Fraction`` with ``rel_error == 0``;
    inexact ones as ``float`` (or an mpmath number when out of float range).
    """

    value: object
    rel_error: float = 0.0

    def __post_init__(self):
        if not (self.rel_error >= 0.0) or self.rel_error == float("inf"):
            raise ValueError(f"bad rel_error {self.rel_error!r}")
        if self.rel_error == 0.0 and not is_exact_number(self.value):
            raise ValueError("an exact ApproxReal needs an int or Fraction value")

    @classmethod
    def exact(cls, value) -> ApproxReal:
        return cls(value, 0.0)

    @property
    def is_exact(self) -> bool:
        return self.rel_error == 0.0

    @property
    def abs_error(self) -> float:
        return abs(float(self.value)) * self.rel_error

    def __float__(self) -> float:
        return float(self.value)

    def as_fraction(self) -> Fraction:
        if is_exact_number(self.value):
            return Fraction(self.value)
        if isinstance(self.value, float):
            return Fraction(self.value)
        return Fraction(MP.nstr(self.value, 40, min_fixed=-1, max_fixed=1))

    def __truediv__(self, other: ApproxReal) -> ApproxReal:
        if self.is_exact and self.value == 0:
            return ApproxReal.exact(0)
        if self.is_exact and other.is_exact:
            return ApproxReal.exact(Fraction(self.value) / Fraction(other.value))
        rel = self.rel_error + other.rel_error + self.rel_error * other.rel_error
        a, b = self.value, other.value
        if _float_ok(a) and _float_ok(b):
            # float() of an int or Fraction is correctly rounded
            return ApproxReal(float(a) / float(b), rel + 3 * EPS)
        q = MP.mpf(_mp_arg(a)) / MP.mpf(_mp_arg(b))
        return ApproxReal(float(q), rel + EPS)

    def __add__(self, other: ApproxReal) -> ApproxReal:
        if self.is_exact and other.is_exact:
            return ApproxReal.exact(Fraction(self.value) + Fraction(other.value))
        # exact rational sum of the carried values; only the bounds propagate
        total = self.as_fraction() + other.as_fraction()
        err = self.abs_error + other.abs_error
        rel = err / abs(float(total)) if total else 0.0
        return ApproxReal(total, max(rel, EPS))

    def __str__(self) -> str:
        if self.is_exact:
            return str(self.value)
        return f"{float(self.value):.12g}±{self.rel_error:.1e}"


def _mp_arg(x):
    if isinstance(x, Fraction):
        return MP.mpf(x.numerator) / x.denominator
    return x


_FLOAT_MAX_EXP = 1000


def _float_ok(x) -> bool:
    if isinstance(x, float):
        return True
    if isinstance(x, int):
        return x.bit_length() < _FLOAT_MAX_EXP
    if isinstance(x, Fraction):
        num, den = x.numerator.bit_length(), x.denominator.bit_length()
        return abs(num - den) < _FLOAT_MAX_EXP
    return False

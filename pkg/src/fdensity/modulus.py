"""Modulus functions: the power, logarithmic and dyadic-recursive families.

A modulus is a function f on the nonnegative reals with f(x) = 0 only at 0,
subadditive, non-decreasing, right-continuous at 0 and unbounded.  Values
are returned as :class:`~fdensity.reals.ApproxReal`; the evaluation contract
is a relative error of at most 1e-12, and the exact cases (power with p = 1,
perfect p-th powers, Example 3, tables) carry ``rel_error == 0``.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import gmpy2

from .errors import DomainError
from .reals import EPS, MP, MP_REL_ERROR, ApproxReal

#: every inexact evaluation stays below this relative error
REL_ERROR_CONTRACT = 1e-12

LN2 = math.log(2.0)
_FLOAT_INT_LIMIT = 1 << 53
_TINY = Fraction(1, 1 << 1000)
_EXP_LIMIT = 700.0
_CACHE_LIMIT = 1 << 20


class Family(str, enum.Enum):
    POWER = "power"
    LOG = "log"
    EXAMPLE3 = "example3"


@dataclass(frozen=True)
class ModulusDescriptor:
    """Immutable description of a modulus function.

    ``p`` is the exponent of the power family, held as an exact rational in
    (0, 1]; it is None for the other families.
    """

    family: Family
    p: Fraction | None = None

    def __post_init__(self):
        try:
            family = Family(self.family)
        except ValueError:
            raise DomainError(f"unknown modulus family {self.family!r}") from None
        object.__setattr__(self, "family", family)
        if family is Family.POWER:
            if self.p is None:
                raise DomainError("power modulus needs an exponent p")
            p = _parse_rational(self.p)
            if not 0 < p <= 1:
                raise DomainError(f"power exponent must lie in (0, 1], got {p}")
            object.__setattr__(self, "p", p)
        elif self.p is not None:
            raise DomainError(f"{family.value} modulus takes no exponent")

    @classmethod
    def power(cls, p) -> ModulusDescriptor:
        return cls(Family.POWER, p)

    @classmethod
    def log(cls) -> ModulusDescriptor:
        return cls(Family.LOG)

    @classmethod
    def example3(cls) -> ModulusDescriptor:
        return cls(Family.EXAMPLE3)

    @classmethod
    def parse(cls, text: str) -> ModulusDescriptor:
        """Parse ``power:<p>``, ``log`` or ``example3``."""
        text = text.strip()
        if text.startswith("power:"):
            return cls.power(text[len("power:"):])
        if text in ("log", "example3"):
            return cls(Family(text))
        raise DomainError(f"cannot parse modulus {text!r}")

    def to_json(self) -> dict:
        if self.family is Family.POWER:
            return {"family": "power", "p": f"{self.p.numerator}/{self.p.denominator}"}
        return {"family": self.family.value}

    @classmethod
    def from_json(cls, obj: dict) -> ModulusDescriptor:
        if not isinstance(obj, dict) or "family" not in obj:
            raise DomainError("modulus JSON must be an object with a 'family' key")
        extra = set(obj) - {"family", "p"}
        if extra:
            raise DomainError(f"unexpected modulus keys {sorted(extra)}")
        return cls(obj["family"], obj.get("p"))

    def __str__(self) -> str:
        if self.family is Family.POWER:
            return f"power:{self.p}"
        return self.family.value


@dataclass(frozen=True)
class TableModulus:
    """A finite table f(0), ..., f(N), linearly interpolated and constant
    beyond N.  Not necessarily a modulus; used to exercise the axiom checker.
    """

    values: tuple = field(default=())

    def __post_init__(self):
        vals = tuple(Fraction(v) for v in self.values)
        if len(vals) < 2:
            raise DomainError("a table modulus needs at least f(0) and f(1)")
        object.__setattr__(self, "values", vals)

    @property
    def domain_max(self) -> int:
        return len(self.values) - 1


def _parse_rational(p) -> Fraction:
    if isinstance(p, float) and not math.isfinite(p):
        raise DomainError("exponent must be finite")
    try:
        return Fraction(p)
    except (ValueError, ZeroDivisionError, TypeError):
        raise DomainError(f"cannot read exponent {p!r} as a rational") from None


def _as_fraction(x) -> Fraction:
    if isinstance(x, bool):
        raise DomainError("booleans are not reals")
    if isinstance(x, float):
        if not math.isfinite(x):
            raise DomainError(f"non-finite argument {x!r}")
        return Fraction(x)
    if isinstance(x, Decimal):
        if not x.is_finite():
            raise DomainError(f"non-finite argument {x!r}")
        return Fraction(x)
    if isinstance(x, Rational):
        return Fraction(x)
    raise DomainError(f"unsupported argument type {type(x).__name__}")


# --- Example 3 -------------------------------------------------------------


def example3_exact(n: int) -> int:
    """Value of the dyadic-recursive modulus at a natural number.

    Top-down recursion on n = 2^k + a with a in [1, 2^k]:
    f(n) = f(2^k) for odd k and f(2^k) + f(a) for even k, from
    f(0) = 0, f(1) = 1, f(2) = 2.  Recursion depth is about twice the bit
    length of n; :func:`eval_big` uses :func:`example3_iterative` instead.
    """
    if n < 0:
        raise DomainError(f"negative argument {n}")
    if n < _CACHE_LIMIT:
        return _example3_cached(n)
    return _example3_step(n)


def _example3_step(n: int) -> int:
    if n <= 2:
        return n
    k = (n - 1).bit_length() - 1
    head = 1 << k
    f_head = example3_exact(head)
    if k % 2:
        return f_head
    rest = n - head
    # rest == head at n = 2^(k+1); a second call would double the work per level
    return f_head + (f_head if rest == head else example3_exact(rest))


# lru_cache is thread-safe and the cached function is pure
_example3_cached = lru_cache(maxsize=1 << 16)(_example3_step)


def example3_iterative(n: int) -> int:
    """Same function, by one pass over the binary decomposition of n.

    Uses the closed form f(2^k) = 2^ceil(k/2) for the leading power and
    walks down the remainders; independent of :func:`example3_exact`.
    """
    if n < 0:
        raise DomainError(f"negative argument {n}")
    acc = 0
    while n > 2:
        k = (n - 1).bit_length() - 1
        acc += 1 << ((k + 1) // 2)
        if k % 2:
            return acc
        n -= 1 << k
    return acc + n


# --- evaluation ------------------------------------------------------------


def _ln_int(n: int) -> tuple[float, float]:
    """ln(n) for n >= 1 with an absolute error bound."""
    if n < _FLOAT_INT_LIMIT:
        v = math.log(n)
        return v, 2 * EPS * abs(v)
    e = n.bit_length()
    mant = (n >> (e - 53)) / float(1 << 53)
    v = e * LN2 + math.log(mant)
    return v, (e * LN2 + 4.0) * 2 * EPS


def _exp_of(y: float, yerr: float):
    if y < _EXP_LIMIT:
        return ApproxReal(math.exp(y), 1.01 * yerr + 2 * EPS)
    return None


def _power_big(p: Fraction, n: int) -> ApproxReal:
    if n == 0:
        return ApproxReal.exact(0)
    if p == 1:
        return ApproxReal.exact(n)
    root, exact = gmpy2.iroot(n, p.denominator)
    if exact:
        return ApproxReal.exact(int(root) ** p.numerator)
    ln, lnerr = _ln_int(n)
    pf = float(p)
    y = pf * ln
    res = _exp_of(y, pf * lnerr + abs(y) * EPS)
    if res is not None:
        return res
    return ApproxReal(MP.exp(MP.mpf(p.numerator) / p.denominator * MP.log(n)), MP_REL_ERROR)


def _power_frac(p: Fraction, x: Fraction) -> ApproxReal:
    if x == 0:
        return ApproxReal.exact(0)
    if p == 1:
        return ApproxReal.exact(x)
    b = p.denominator
    rn, en = gmpy2.iroot(x.numerator, b)
    rd, ed = gmpy2.iroot(x.denominator, b)
    if en and ed:
        return ApproxReal.exact(Fraction(int(rn) ** p.numerator, int(rd) ** p.numerator))
    if _TINY < x < _FLOAT_INT_LIMIT:
        lx = math.log(float(x))
        pf = float(p)
        y = pf * lx
        res = _exp_of(y, pf * (abs(lx) * 2 * EPS + 2 * EPS) + abs(y) * EPS)
        if res is not None:
            return res
    xm = MP.mpf(x.numerator) / x.denominator
    return ApproxReal(MP.power(xm, MP.mpf(p.numerator) / p.denominator), MP_REL_ERROR)


def _log_big(n: int) -> ApproxReal:
    if n == 0:
        return ApproxReal.exact(0)
    v, err = _ln_int(n + 1)
    return ApproxReal(v, err / v)


def _log_frac(x: Fraction) -> ApproxReal:
    if x == 0:
        return ApproxReal.exact(0)
    if _TINY < x < _FLOAT_INT_LIMIT:
        return ApproxReal(math.log1p(float(x)), 3 * EPS)
    xm = MP.mpf(x.numerator) / x.denominator
    return ApproxReal(MP.log1p(xm), MP_REL_ERROR)


def _interpolate(node, x: Fraction) -> Fraction:
    lo = x.numerator // x.denominator
    frac = x - lo
    f_lo = node(lo)
    if frac == 0:
        return Fraction(f_lo)
    return f_lo + frac * (node(lo + 1) - f_lo)


def _table_node(table: TableModulus, n: int) -> Fraction:
    return table.values[min(n, table.domain_max)]


def eval_big(m, n: int) -> ApproxReal:
    """f(n) for an arbitrary-precision natural number n."""
    if isinstance(n, bool) or not isinstance(n, int):
        if isinstance(n, Rational) and Fraction(n).denominator == 1:
            n = int(n)
        else:
            raise DomainError(f"eval_big needs an integer, got {n!r}")
    if n < 0:
        raise DomainError(f"negative argument {n}")
    if isinstance(m, TableModulus):
        return ApproxReal.exact(_table_node(m, n))
    if m.family is Family.EXAMPLE3:
        return ApproxReal.exact(example3_iterative(n))
    if m.family is Family.POWER:
        return _power_big(m.p, n)
    return _log_big(n)


def evaluate(m, x) -> ApproxReal:
    """f(x) for a nonnegative real x (int, Fraction, float or Decimal).

    Floats are taken at their exact binary value.  Example 3 and tables are
    linearly interpolated between consecutive integers.
    """
    x = _as_fraction(x)
    if x < 0:
        raise DomainError(f"negative argument {x}")
    if x.denominator == 1:
        return eval_big(m, x.numerator)
    if isinstance(m, TableModulus):
        return ApproxReal.exact(_interpolate(lambda k: _table_node(m, k), x))
    if m.family is Family.EXAMPLE3:
        return ApproxReal.exact(_interpolate(example3_iterative, x))
    if m.family is Family.POWER:
        return _power_frac(m.p, x)
    return _log_frac(x)


# --- axiom checks ----------------------------------------------------------

AXIOMS = (
    "zero_at_zero",
    "subadditivity",
    "monotonicity",
    "right_continuity_at_0",
    "unboundedness",
)

_SUBADD_RANGE = 1 << 16
_CONTINUITY_STEPS = 4096
_CONTINUITY_TOL = 1e-9
_UNBOUNDED_STEPS = 1000
_UNBOUNDED_FACTOR = Fraction(3, 2)
_GUARD = 10


@dataclass(frozen=True)
class AxiomVerdict:
    passed: bool
    checked: int
    counterexample: tuple | None = None
    note: str = ""

    def to_json(self) -> dict:
        ce = None
        if self.counterexample is not None:
            ce = [_json_number(v) for v in self.counterexample]
        return {"passed": self.passed, "checked": self.checked,
                "counterexample": ce, "note": self.note}


@dataclass(frozen=True)
class AxiomReport:
    verdicts: dict
    sample_count: int
    rng_seed: int

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts.values())

    def __getitem__(self, name: str) -> AxiomVerdict:
        return self.verdicts[name]

    def to_json(self) -> dict:
        return {
            "all_passed": self.all_passed,
            "sample_count": self.sample_count,
            "rng_seed": self.rng_seed,
            "axioms": {name: self.verdicts[name].to_json() for name in AXIOMS},
        }


def _json_number(v):
    v = Fraction(v)
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def _exceeds(lhs: ApproxReal, *rhs: ApproxReal) -> bool:
    """True when lhs > sum(rhs) beyond the combined evaluation error."""
    if lhs.is_exact and all(r.is_exact for r in rhs):
        return Fraction(lhs.value) > sum(Fraction(r.value) for r in rhs)
    total = sum(float(r) for r in rhs)
    slack = lhs.abs_error + sum(r.abs_error for r in rhs)
    slack += EPS * (abs(float(lhs)) + sum(abs(float(r)) for r in rhs))
    return float(lhs) - total > _GUARD * slack


def _subadd_violated(m, w: int, z: int) -> bool:
    return _exceeds(eval_big(m, w + z), eval_big(m, w), eval_big(m, z))


def _shrink_pair(m, w: int, z: int, ok) -> tuple[int, int]:
    w, z = min(w, z), max(w, z)
    improved = True
    while improved:
        improved = False
        for cw, cz in ((w // 2, z), (w - 1, z), (w, z // 2), (w, z - 1)):
            cw, cz = min(cw, cz), max(cw, cz)
            if cw < 0 or (cw, cz) == (w, z) or not ok(cw, cz):
                continue
            if _subadd_violated(m, cw, cz):
                w, z = cw, cz
                improved = True
                break
    return w, z


def _check_zero(m, rng, budget) -> AxiomVerdict:
    if not (evaluate(m, 0).is_exact and evaluate(m, 0).value == 0):
        return AxiomVerdict(False, 1, (0,), "f(0) != 0")
    points = [Fraction(1, 1 << j) for j in range(1, 65)]
    hi = _domain_hi(m)
    points += [rng.randint(1, hi) for _ in range(min(budget, 1000))]
    for x in points:
        v = evaluate(m, x)
        if not v.value > 0:
            return AxiomVerdict(False, len(points), (x,), "f(x) = 0 at x > 0")
    return AxiomVerdict(True, len(points) + 1)


def _domain_hi(m) -> int:
    if isinstance(m, TableModulus):
        return max(1, m.domain_max)
    return _SUBADD_RANGE


def _check_subadditivity(m, rng, budget) -> AxiomVerdict:
    if isinstance(m, TableModulus):
        top = m.domain_max

        def draw():
            w = rng.randint(0, top)
            return w, rng.randint(0, top - w)

        def ok(w, z):
            return w + z <= top
    else:
        def draw():
            return rng.randint(1, _SUBADD_RANGE), rng.randint(1, _SUBADD_RANGE)

        def ok(w, z):
            return True

    for _ in range(budget):
        w, z = draw()
        if _subadd_violated(m, w, z):
            w, z = _shrink_pair(m, w, z, ok)
            return AxiomVerdict(False, budget, (w, z), "f(w+z) > f(w) + f(z)")
    return AxiomVerdict(True, budget)


def _check_monotonicity(m, rng, budget) -> AxiomVerdict:
    hi = 4 * _domain_hi(m)
    for _ in range(budget):
        a, b = sorted(rng.sample(range(hi + 1), 2))
        x, y = Fraction(a, 4), Fraction(b, 4)
        if _exceeds(evaluate(m, x), evaluate(m, y)):
            return AxiomVerdict(False, budget, (x, y), "f(x) > f(y) with x < y")
    return AxiomVerdict(True, budget)


def _check_right_continuity(m) -> AxiomVerdict:
    prev = evaluate(m, 1)
    scale = max(1.0, float(prev))
    for j in range(1, _CONTINUITY_STEPS + 1):
        x = Fraction(1, 1 << j)
        cur = evaluate(m, x)
        if _exceeds(cur, prev):
            return AxiomVerdict(False, j, (x,), "f increases as x decreases to 0")
        prev = cur
    if float(prev) > _CONTINUITY_TOL * scale:
        return AxiomVerdict(False, _CONTINUITY_STEPS, (Fraction(1, 1 << _CONTINUITY_STEPS),),
                            "f does not approach 0 along x = 2^-j")
    return AxiomVerdict(True, _CONTINUITY_STEPS)


def _check_unboundedness(m) -> AxiomVerdict:
    prev = eval_big(m, 1)
    for j in range(1, _UNBOUNDED_STEPS + 1):
        cur = eval_big(m, 1 << j)
        if _exceeds(prev, cur):
            return AxiomVerdict(False, j, (1 << j,), "f decreases along x = 2^j")
        prev = cur
    far = eval_big(m, 1 << _UNBOUNDED_STEPS)
    mid = eval_big(m, 1 << (_UNBOUNDED_STEPS // 2))
    if far.is_exact and mid.is_exact:
        grows = Fraction(far.value) >= _UNBOUNDED_FACTOR * Fraction(mid.value)
    else:
        grows = (far / mid).value >= float(_UNBOUNDED_FACTOR)
    if not grows:
        return AxiomVerdict(False, _UNBOUNDED_STEPS, (1 << _UNBOUNDED_STEPS,),
                            "f(2^J) < 1.5 f(2^(J/2)): growth has stalled")
    return AxiomVerdict(True, _UNBOUNDED_STEPS)


def check_axioms(m, sample_budget: int, seed: int) -> AxiomReport:
    """Property-sample the five modulus axioms.

    Subadditivity uses ``sample_budget`` random integer pairs w, z <= 2^16
    (within the table for a :class:`TableModulus`) and shrinks any failing
    pair; monotonicity uses as many random increasing pairs on a quarter-step
    mesh.  Right-continuity and unboundedness walk the grids 2^-j and 2^j.
    Deterministic given ``seed``.
    """
    if sample_budget < 1:
        raise DomainError("sample_budget must be >= 1")
    rng = random.Random(seed)
    verdicts = {
        "zero_at_zero": _check_zero(m, rng, sample_budget),
        "subadditivity": _check_subadditivity(m, rng, sample_budget),
        "monotonicity": _check_monotonicity(m, rng, sample_budget),
        "right_continuity_at_0": _check_right_continuity(m),
        "unboundedness": _check_unboundedness(m),
    }
    return AxiomReport(verdicts, sample_budget, seed)

"""Subsets of the naturals, counting functions and density profiles."""

from __future__ import annotations

import csv
import io
import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import accumulate

from .errors import DomainError, PreconditionError
from .modulus import eval_big
from .reals import ApproxReal

BUILTIN_NAMES = ("evens", "squares", "powers-of-two")
_JSON_SAFE = 1 << 53


def _as_int(v, what="integer") -> int:
    if isinstance(v, bool):
        raise DomainError(f"{what} must be an integer, got {v!r}")
    if isinstance(v, int):
        return v
    if isinstance(v, str):
        try:
            return int(v.strip())
        except ValueError:
            raise DomainError(f"{what} must be an integer, got {v!r}") from None
    raise DomainError(f"{what} must be an integer, got {v!r}")


def int_to_json(n: int):
    """Small integers stay JSON numbers; larger ones become decimal strings."""
    return n if abs(n) < _JSON_SAFE else str(n)


@dataclass(frozen=True)
class ExplicitFinite:
    elements: tuple = ()

    def __post_init__(self):
        elems = tuple(_as_int(e, "element") for e in self.elements)
        if elems and elems[0] < 1:
            raise DomainError("set elements must be >= 1")
        if any(a >= b for a, b in zip(elems, elems[1:])):
            raise DomainError("explicit elements must be strictly increasing")
        object.__setattr__(self, "elements", elems)

    def alpha(self, n: int) -> int:
        return bisect_right(self.elements, n)

    def __contains__(self, n) -> bool:
        i = bisect_right(self.elements, n)
        return i > 0 and self.elements[i - 1] == n

    def to_json(self) -> dict:
        return {"type": "explicit", "elements": [int_to_json(e) for e in self.elements]}


@dataclass(frozen=True)
class Blocks:
    """Sorted disjoint closed intervals [a_i, b_i] of positive integers."""

    blocks: tuple = ()
    _starts: tuple = field(default=(), init=False, repr=False, compare=False)
    _before: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        blocks = tuple((_as_int(a, "block endpoint"), _as_int(b, "block endpoint"))
                       for a, b in self.blocks)
        for a, b in blocks:
            if a < 1 or b < a:
                raise DomainError(f"bad block [{a}, {b}]")
        for (_, b0), (a1, _) in zip(blocks, blocks[1:]):
            if not b0 < a1:
                raise DomainError(f"blocks overlap or are unsorted at {b0} >= {a1}")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "_starts", tuple(a for a, _ in blocks))
        sizes = [b - a + 1 for a, b in blocks]
        object.__setattr__(self, "_before", tuple(accumulate(sizes, initial=0)))

    def alpha(self, n: int) -> int:
        # blocks entirely left of the last started one contribute their size
        i = bisect_right(self._starts, n)
        if i == 0:
            return 0
        a, b = self.blocks[i - 1]
        return self._before[i - 1] + min(b, n) - a + 1

    def __contains__(self, n) -> bool:
        i = bisect_right(self._starts, n)
        return i > 0 and n <= self.blocks[i - 1][1]

    @property
    def size(self) -> int:
        return self._before[-1]

    def to_json(self) -> dict:
        return {"type": "blocks",
                "blocks": [[int_to_json(a), int_to_json(b)] for a, b in self.blocks]}


@dataclass(frozen=True)
class Builtin:
    name: str

    def __post_init__(self):
        if self.name not in BUILTIN_NAMES:
            raise DomainError(f"unknown built-in set {self.name!r}; "
                              f"choose from {', '.join(BUILTIN_NAMES)}")

    def alpha(self, n: int) -> int:
        if n <= 0:
            return 0
        if self.name == "evens":
            return n // 2
        if self.name == "squares":
            return math.isqrt(n)
        return n.bit_length()

    def __contains__(self, n) -> bool:
        if n < 1:
            return False
        if self.name == "evens":
            return n % 2 == 0
        if self.name == "squares":
            return math.isqrt(n) ** 2 == n
        return n & (n - 1) == 0

    def to_json(self) -> dict:
        return {"type": "builtin", "name": self.name}


def set_from_json(obj):
    if not isinstance(obj, dict):
        raise DomainError("set definition must be a JSON object")
    kind = obj.get("type")
    if kind == "explicit":
        return ExplicitFinite(tuple(obj.get("elements", ())))
    if kind == "blocks":
        try:
            return Blocks(tuple((a, b) for a, b in obj.get("blocks", ())))
        except (TypeError, ValueError) as exc:
            raise DomainError(f"malformed blocks: {exc}") from None
    if kind == "builtin":
        return Builtin(obj.get("name"))
    raise DomainError(f"unknown set type {kind!r}")


def alpha(A, n: int) -> int:
    """Exact count of elements of A in [1, n]."""
    n = _as_int(n, "n")
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    return A.alpha(n)


# --- grids and profiles ----------------------------------------------------

DENSE_PREFIX = 1000
GRID_RATIO = Fraction(101, 100)


def default_grid(horizon: int) -> tuple:
    """Integers 1..1000, then steps of ratio 1.01 rounded up, ending at ``horizon``."""
    horizon = _as_int(horizon, "horizon")
    if horizon < 1:
        raise DomainError("horizon must be >= 1")
    grid = list(range(1, min(horizon, DENSE_PREFIX) + 1))
    x = grid[-1]
    while True:
        x = -(-x * GRID_RATIO.numerator // GRID_RATIO.denominator)
        if x >= horizon:
            break
        grid.append(x)
    if grid[-1] != horizon:
        grid.append(horizon)
    return tuple(grid)


def _check_grid(grid) -> tuple:
    grid = tuple(_as_int(n, "grid point") for n in grid)
    if not grid:
        raise PreconditionError("grid must be nonempty")
    if grid[0] < 1:
        raise PreconditionError("grid points must be >= 1 (ratios at n = 0 are undefined)")
    if any(a >= b for a, b in zip(grid, grid[1:])):
        raise PreconditionError("grid must be strictly increasing")
    return grid


@dataclass(frozen=True)
class ProfileRow:
    n: int
    alpha: int
    nat_ratio: float
    f_ratio: ApproxReal | None = None


@dataclass(frozen=True)
class DensityProfile:
    rows: tuple
    modulus: object = None
    grid: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "alpha", "nat_ratio", "f_ratio", "f_ratio_err"])
        for r in self.rows:
            if r.f_ratio is None:
                f_cols = ["", ""]
            else:
                f_cols = [f"{float(r.f_ratio):.12g}", f"{r.f_ratio.rel_error:.3g}"]
            w.writerow([r.n, r.alpha, f"{r.nat_ratio:.12g}", *f_cols])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "modulus": None if self.modulus is None else self.modulus.to_json(),
            "grid": self.grid,
            "rows": [
                {"n": str(r.n), "alpha": str(r.alpha), "nat_ratio": r.nat_ratio,
                 "f_ratio": None if r.f_ratio is None else float(r.f_ratio),
                 "f_ratio_err": None if r.f_ratio is None else r.f_ratio.rel_error}
                for r in self.rows
            ],
        }


def _grid_desc(grid, desc):
    if desc is not None:
        return desc
    return {"kind": "explicit", "size": len(grid), "first": str(grid[0]), "last": str(grid[-1])}


def density_profile(A, grid, grid_desc: dict | None = None) -> DensityProfile:
    grid = _check_grid(grid)
    rows = []
    for n in grid:
        a = A.alpha(n)
        rows.append(ProfileRow(n, a, float(Fraction(a, n))))
    return DensityProfile(tuple(rows), None, _grid_desc(grid, grid_desc))


def f_density_profile(A, m, grid, grid_desc: dict | None = None) -> DensityProfile:
    grid = _check_grid(grid)
    rows = []
    for n in grid:
        a = A.alpha(n)
        rows.append(ProfileRow(n, a, float(Fraction(a, n)), eval_big(m, a) / eval_big(m, n)))
    return DensityProfile(tuple(rows), m, _grid_desc(grid, grid_desc))


# --- membership heuristics -------------------------------------------------


@dataclass(frozen=True)
class MembershipVerdict:
    ideal: str
    verdict: str
    evidence: dict

    def to_json(self) -> dict:
        return {"ideal": self.ideal, "verdict": self.verdict, "evidence": self.evidence}


def membership_verdict(profile: DensityProfile, threshold: float = 0.01,
                       tail_fraction: float = 0.25, ideal: str | None = None) -> MembershipVerdict:
    """Finite-horizon guess whether the profiled set has density zero.

    Looks at the supremum of the ratio over the last ``tail_fraction`` of
    rows.  In-ideal needs that supremum below ``threshold`` with the maxima
    over dyadic segments [2^j, 2^(j+1)) meeting the tail non-increasing;
    not-in-ideal needs it above half the overall maximum and the whole tail
    above ``threshold``.
    """
    rows = profile.rows
    if len(rows) < 2:
        raise PreconditionError("membership verdict needs at least 2 profile rows")
    if not 0 < tail_fraction <= 1:
        raise PreconditionError("tail_fraction must lie in (0, 1]")
    if ideal is None:
        ideal = "statistical" if profile.modulus is None else "f-ideal"
    if ideal == "statistical":
        values = [r.nat_ratio for r in rows]
    elif ideal == "f-ideal":
        if profile.modulus is None:
            raise PreconditionError("f-ideal verdict needs an f-density profile")
        values = [float(r.f_ratio) for r in rows]
    else:
        raise PreconditionError(f"unknown ideal {ideal!r}")

    start = len(rows) - max(1, math.ceil(tail_fraction * len(rows)))
    tail = values[start:]
    tail_sup, tail_min, overall = max(tail), min(tail), max(values)

    seg_max = {}
    for r, v in zip(rows, values):
        j = r.n.bit_length() - 1
        seg_max[j] = max(seg_max.get(j, v), v)
    first_seg = rows[start].n.bit_length() - 1
    seg_seq = [seg_max[j] for j in sorted(seg_max) if j >= first_seg]
    seg_nonincreasing = all(b <= a for a, b in zip(seg_seq, seg_seq[1:]))

    if tail_sup < threshold and seg_nonincreasing:
        verdict = "in-ideal"
    elif tail_sup > 0.5 * overall and tail_min > threshold:
        verdict = "not-in-ideal"
    else:
        verdict = "inconclusive"
    evidence = {
        "heuristic": True,
        "tail_sup": tail_sup,
        "tail_min": tail_min,
        "overall_max": overall,
        "tail_start_n": str(rows[start].n),
        "horizon": str(rows[-1].n),
        "dyadic_segment_maxima": seg_seq,
        "segments_nonincreasing": seg_nonincreasing,
        "policy": {"threshold": threshold, "tail_fraction": tail_fraction},
    }
    return MembershipVerdict(ideal, verdict, evidence)


def load_set(path) -> object:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DomainError(f"malformed set JSON in {path}: {exc}") from None
    return set_from_json(obj)

"""Build a set of density zero whose f-density does not vanish.

Given a modulus f and xi in (0, 1), pick witnesses n_1 < n_2 < ... with
f(n_k) > xi * f(2^k n_k), put m_k = 2^k n_k, and let stage k contribute the
top n_k - n_{k-1} integers below m_k.  Then alpha(m_k) = n_k, so
f(alpha(m_k)) / f(m_k) > xi, while alpha(j) / j < 2^-k on (m_k, m_{k+1}].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import NotFound, PreconditionError
from .modulus import eval_big
from .reals import EPS, ApproxReal
from .sets import Blocks, set_from_json

DEFAULT_XI = Fraction(1, 2)
DEFAULT_STAGES = 12
DEFAULT_CAP = 10**7
GUARD = 10


def _as_xi(xi) -> Fraction:
    try:
        xi = Fraction(xi)
    except (TypeError, ValueError):
        raise PreconditionError(f"cannot read xi = {xi!r}") from None
    if not 0 < xi < 1:
        raise PreconditionError(f"xi must lie in (0, 1), got {xi}")
    return xi


def _margin(f_small: ApproxReal, f_big: ApproxReal, xi: Fraction):
    """f_small - xi*f_big and the error band it must clear."""
    if f_small.is_exact and f_big.is_exact:
        return Fraction(f_small.value) - xi * Fraction(f_big.value), 0.0
    a, b = float(f_small), float(f_big)
    diff = a - float(xi) * b
    band = GUARD * (f_small.abs_error + float(xi) * f_big.abs_error + 2 * EPS * (abs(a) + abs(b)))
    return diff, band


def beats(f_small: ApproxReal, f_big: ApproxReal, xi: Fraction) -> bool:
    """f_small > xi * f_big, accepted only outside the guard band."""
    diff, band = _margin(f_small, f_big, xi)
    return diff > band


def find_witness(m, xi, k: int, start: int, cap: int) -> int:
    """Smallest n in [start, cap] with f(n) > xi * f(2^k n).

    Linear scan: the predicate is not monotone in n (Example 3 oscillates).
    Raises NotFound when nothing qualifies below ``cap``.
    """
    xi = _as_xi(xi)
    if k < 1:
        raise PreconditionError(f"k must be >= 1, got {k}")
    if not 1 <= start <= cap:
        raise PreconditionError(f"need 1 <= start <= cap, got start={start}, cap={cap}")
    for n in range(start, cap + 1):
        if beats(eval_big(m, n), eval_big(m, n << k), xi):
            return n
    raise NotFound(f"no n in [{start}, {cap}] with f(n) > {xi} f(2^{k} n)")


@dataclass(frozen=True)
class Stage:
    k: int
    n: int
    m: int
    block: tuple


@dataclass(frozen=True)
class SeparatorResult:
    xi: Fraction
    stages: tuple
    cap: int | None = None
    starts: tuple = ()

    @property
    def K(self) -> int:
        return len(self.stages)

    @property
    def witnesses(self) -> tuple:
        return tuple(s.n for s in self.stages)

    @property
    def points(self) -> tuple:
        return tuple(s.m for s in self.stages)

    @property
    def blocks(self) -> tuple:
        return tuple(s.block for s in self.stages)

    def as_set(self) -> Blocks:
        return Blocks(self.blocks)

    def to_json(self) -> dict:
        return {
            "xi": float(self.xi),
            "xi_exact": f"{self.xi.numerator}/{self.xi.denominator}",
            "stages": [{"k": s.k, "n": str(s.n), "m": str(s.m),
                        "block": [str(s.block[0]), str(s.block[1])]} for s in self.stages],
            "set": {"type": "blocks",
                    "blocks": [[str(a), str(b)] for a, b in self.blocks]},
            "search": {"cap": None if self.cap is None else str(self.cap),
                       "starts": [str(s) for s in self.starts]},
        }

    @classmethod
    def from_json(cls, obj: dict) -> SeparatorResult:
        try:
            xi = Fraction(obj["xi_exact"]) if "xi_exact" in obj else Fraction(str(obj["xi"]))
            stages = tuple(
                Stage(int(s["k"]), int(s["n"]), int(s["m"]),
                      (int(s["block"][0]), int(s["block"][1])))
                for s in obj["stages"])
            search = obj.get("search", {})
            cap = search.get("cap")
            starts = tuple(int(s) for s in search.get("starts", ()))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise PreconditionError(f"malformed separator result: {exc!r}") from None
        if "set" in obj:
            stored = set_from_json(obj["set"])
            if not isinstance(stored, Blocks) or stored.blocks != tuple(s.block for s in stages):
                raise PreconditionError("stored set does not match the stage blocks")
        return cls(xi, stages, None if cap is None else int(cap), starts)


def stage_block(k: int, n_k: int, n_prev: int) -> tuple:
    m_k = n_k << k
    return (m_k - n_k + n_prev, m_k - 1)


def build_separating_set(m, xi=DEFAULT_XI, K: int = DEFAULT_STAGES,
                         cap: int = DEFAULT_CAP) -> SeparatorResult:
    """Run the witness search for k = 1..K and assemble the block set.

    A NotFound from any stage propagates with the completed stages attached.
    """
    xi = _as_xi(xi)
    if isinstance(K, bool) or not isinstance(K, int) or K < 1:
        raise PreconditionError(f"K must be an integer >= 1, got {K!r}")
    if cap < 1:
        raise PreconditionError(f"cap must be >= 1, got {cap}")
    stages, starts = [], []
    n_prev = 0
    for k in range(1, K + 1):
        start = n_prev + 1
        if start > cap:
            raise NotFound(f"stage {k}: start {start} exceeds cap {cap}", k, stages)
        try:
            n_k = find_witness(m, xi, k, start, cap)
        except NotFound as exc:
            raise NotFound(f"stage {k}: {exc}", k, stages) from None
        stages.append(Stage(k, n_k, n_k << k, stage_block(k, n_k, n_prev)))
        starts.append(start)
        n_prev = n_k
    return SeparatorResult(xi, tuple(stages), cap, tuple(starts))


# --- verification ----------------------------------------------------------


@dataclass(frozen=True)
class Check:
    k: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"k": self.k, "check": self.name, "passed": self.passed, **self.detail}


@dataclass(frozen=True)
class ConstructionReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def stage(self, k: int) -> dict:
        return {c.name: c for c in self.checks if c.k == k}

    def to_json(self) -> dict:
        return {"overall": "pass" if self.passed else "fail",
                "checks": [c.to_json() for c in self.checks]}


def _stage_samples(m_k: int, n_k: int, m_next: int, n_next: int, count: int) -> list:
    """Segment endpoints of (m_k, m_next] plus evenly spaced fillers."""
    flat_end = m_next - n_next + n_k - 1
    ramp_start = flat_end + 1
    must = {m_k + 1, m_next - 1, m_next}
    if flat_end >= m_k + 1:
        must.add(flat_end)
    if ramp_start <= m_next - 1:
        must.add(ramp_start)
    must = {j for j in must if m_k < j <= m_next}
    extra = max(0, count - len(must))
    span = m_next - m_k
    for i in range(1, extra + 1):
        must.add(m_k + max(1, span * i // (extra + 1)))
    return sorted(must)


def _check_well_formed(res: SeparatorResult):
    if not isinstance(res, SeparatorResult) or not res.stages:
        raise PreconditionError("verify needs a separator result with at least one stage")
    for i, s in enumerate(res.stages, start=1):
        if s.k != i:
            raise PreconditionError(f"stage numbering broken at position {i} (k={s.k})")
        if s.n < 1 or s.m != s.n << s.k:
            raise PreconditionError(f"stage {s.k}: m must equal 2^k * n")
        a, b = s.block
        if a > b:
            raise PreconditionError(f"stage {s.k}: empty or reversed block [{a}, {b}]")
    ns = [s.n for s in res.stages]
    if any(x >= y for x, y in zip(ns, ns[1:])):
        raise PreconditionError("witnesses must be strictly increasing")


def _alpha_from_blocks(blocks, j: int) -> int:
    return sum(max(0, min(b, j) - a + 1) for a, b in blocks)


def verify_construction(res: SeparatorResult, m, samples_per_stage: int = 16) -> ConstructionReport:
    """Re-check every stage of a construction from its stored numbers.

    Per stage k: (a) alpha(m_k) = n_k exactly, (b) f(n_k)/f(m_k) > xi with
    the guard band, (c) block k lies inside (m_{k-1}, m_k] and has n_k - n_{k-1}
    elements, (d) alpha(j)/j < 2^-k on sampled j in (m_k, m_{k+1}] (for the
    last stage, in (m_K, 2 m_K], where no further elements occur).
    """
    _check_well_formed(res)
    if samples_per_stage < 1:
        raise PreconditionError("samples_per_stage must be >= 1")
    blocks = res.blocks
    stages = res.stages
    checks = []
    n_prev, m_prev = 0, 0
    for idx, s in enumerate(stages):
        k = s.k
        got = _alpha_from_blocks(blocks, s.m)
        checks.append(Check(k, "alpha_at_mk_equals_nk", got == s.n,
                            {"alpha": str(got), "n_k": str(s.n), "m_k": str(s.m)}))

        f_n, f_m = eval_big(m, s.n), eval_big(m, s.m)
        ratio = f_n / f_m
        diff, band = _margin(f_n, f_m, res.xi)
        checks.append(Check(k, "f_ratio_at_mk_exceeds_xi", diff > band,
                            {"f_ratio": float(ratio), "xi": float(res.xi),
                             "margin": float(diff), "guard_band": band}))

        a, b = s.block
        size_ok = b - a + 1 == s.n - n_prev
        inside = m_prev < a and b <= s.m
        checks.append(Check(k, "block_disjoint", size_ok and inside,
                            {"block": [str(a), str(b)], "m_prev": str(m_prev),
                             "size_ok": size_ok, "inside": inside}))

        if idx + 1 < len(stages):
            nxt = stages[idx + 1]
            js = _stage_samples(s.m, s.n, nxt.m, nxt.n, samples_per_stage)
        else:
            js = _stage_samples(s.m, s.n, 2 * s.m, s.n, samples_per_stage)
        worst_j, worst = None, Fraction(0)
        ok = True
        for j in js:
            aj = _alpha_from_blocks(blocks, j)
            # alpha_j / j < 2^-k  <=>  alpha_j * 2^k < j, exactly
            if (aj << k) >= j:
                ok = False
            r = Fraction(aj, j)
            if worst_j is None or r > worst:
                worst_j, worst = j, r
        checks.append(Check(k, "density_below_2^-k", ok,
                            {"samples": len(js), "max_ratio": float(worst),
                             "argmax_j": str(worst_j), "bound": 2.0 ** -k}))
        n_prev, m_prev = s.n, s.m
    return ConstructionReport(tuple(checks))

"""Finite-horizon estimates of h_f(t), g_f(k) and the ideal-equality verdicts.

Every limsup is estimated as a maximum over a tail window [w*H, H] of the
default horizon grid; every verdict is a heuristic over finite data and
records the policy that produced it.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DomainError, PreconditionError
from .modulus import eval_big, evaluate
from .reals import ApproxReal
from .sets import default_grid

DEFAULT_WINDOW = 0.5
THEOREM2_EPSILON = 0.01
FINAL_G_THRESHOLD = 0.1
G_FLOOR = 0.1
TREND_TOL = 1e-9


def _as_t(t) -> Fraction:
    if isinstance(t, float) and not math.isfinite(t):
        raise DomainError(f"t must be finite, got {t!r}")
    try:
        t = Fraction(t)
    except (TypeError, ValueError):
        raise DomainError(f"cannot read t = {t!r} as a real") from None
    if t < 1:
        raise DomainError(f"t must be >= 1, got {t}")
    return t


def _f_at(m, x: Fraction) -> ApproxReal:
    if x.denominator == 1:
        return eval_big(m, x.numerator)
    return evaluate(m, x)


def ratio_sequence(m, t, grid) -> list:
    """[(n, f(n)/f(t n))] over ``grid``; t n is formed exactly as a rational."""
    t = _as_t(t)
    out = []
    for n in grid:
        if t.denominator == 1:
            tn = Fraction(n * t.numerator)
        else:
            tn = t * n
        out.append((n, eval_big(m, n) / _f_at(m, tn)))
    return out


def ratio_sequence_csv(seq) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "ratio", "ratio_err"])
    for n, r in seq:
        w.writerow([n, f"{float(r):.12g}", f"{r.rel_error:.3g}"])
    return buf.getvalue()


def window_grid(horizon: int, window: float) -> list:
    """Default grid points in [ceil(window*horizon), horizon], both ends included."""
    if isinstance(horizon, bool) or not isinstance(horizon, int):
        raise PreconditionError(f"horizon must be an integer, got {horizon!r}")
    if horizon < 100:
        raise PreconditionError(f"horizon must be >= 100, got {horizon}")
    w = Fraction(window)
    if not 0 < w <= 1:
        raise PreconditionError(f"window must lie in (0, 1], got {window}")
    lo = max(1, math.ceil(w * horizon))
    pts = {n for n in default_grid(horizon) if n >= lo}
    pts.update((lo, horizon))
    return sorted(pts)


@dataclass(frozen=True)
class LimsupEstimate:
    t: Fraction
    horizon: int
    window: float
    estimate: ApproxReal
    argmax_n: int
    points: int
    k: int | None = None

    def to_json(self) -> dict:
        out = {"value": float(self.estimate), "rel_error": self.estimate.rel_error,
               "argmax_n": str(self.argmax_n), "t": str(self.t),
               "horizon": str(self.horizon), "window": self.window, "points": self.points}
        if self.k is not None:
            out = {"k": self.k, **out}
        return out


def _max_first(seq):
    best_n, best = seq[0]
    for n, r in seq[1:]:
        if r.value > best.value:
            best_n, best = n, r
    return best_n, best


def estimate_h(m, t, horizon: int, window: float = DEFAULT_WINDOW) -> LimsupEstimate:
    """Tail maximum of f(n)/f(t n); ties go to the smallest n."""
    t = _as_t(t)
    grid = window_grid(horizon, window)
    n, best = _max_first(ratio_sequence(m, t, grid))
    return LimsupEstimate(t, horizon, window, best, n, len(grid))


def estimate_g(m, k: int, horizon: int, window: float = DEFAULT_WINDOW) -> LimsupEstimate:
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise DomainError(f"k must be an integer >= 1, got {k!r}")
    est = estimate_h(m, 1 << k, horizon, window)
    return LimsupEstimate(est.t, est.horizon, est.window, est.estimate, est.argmax_n,
                          est.points, k)


def delta(m, t, horizon: int, window: float = DEFAULT_WINDOW) -> ApproxReal:
    """h_f(t) + 1/t, the majorant used for the direction I_s in I_f."""
    t = _as_t(t)
    return estimate_h(m, t, horizon, window).estimate + ApproxReal.exact(1 / t)


# --- verdicts --------------------------------------------------------------


@dataclass(frozen=True)
class CriterionVerdict:
    criterion: str
    verdict: str
    a: object = None
    estimates: tuple = ()
    policy: dict = field(default_factory=dict)
    evidence: dict = field(default_factory=dict)
    passed: bool | None = None

    def to_json(self) -> dict:
        out = {
            "criterion": self.criterion,
            "verdict": self.verdict,
            "heuristic": True,
            "a": None if self.a is None else float(self.a),
            "estimates": [e.to_json() for e in self.estimates],
            "policy": self.policy,
            "evidence": self.evidence,
        }
        if self.passed is not None:
            out["passed"] = self.passed
        return out


def _mean(values):
    if all(isinstance(v, (int, Fraction)) for v in values):
        return sum(Fraction(v) for v in values) / len(values)
    return math.fsum(float(v) for v in values) / len(values)


def _extrapolate_log_scale(ns, values) -> float:
    """Intercept of the least-squares line of the ratio against 1/ln(n)."""
    xs = [1.0 / math.log(n) for n in ns]
    ys = [float(v) for v in values]
    if len(set(ys)) == 1:
        return ys[0]
    return statistics.linear_regression(xs, ys).intercept


def theorem2_verdict(m, horizon: int = 10**6, epsilon: float = THEOREM2_EPSILON,
                     window: float = DEFAULT_WINDOW) -> CriterionVerdict:
    """Decide I_f = I_s from the limit of f(n)/f(2n), when it appears to exist.

    ``a`` is the tail mean of the ratio.  A tail oscillation above epsilon
    means the limit may not exist, and the verdict is inconclusive.  Otherwise
    the limit is extrapolated to n = infinity linearly in 1/ln(n), which
    separates slowly varying moduli (ratio creeping up to 1) from ones whose
    ratio has settled below 1.
    """
    if not 0 < epsilon < 0.5:
        raise PreconditionError(f"epsilon must lie in (0, 0.5), got {epsilon}")
    grid = window_grid(horizon, window)
    seq = ratio_sequence(m, 2, grid)
    values = [r.value for _, r in seq]
    a = _mean(values)
    hi, lo = max(values), min(values)
    oscillation = float(hi) - float(lo)
    limit = _extrapolate_log_scale(grid, values)
    if oscillation > epsilon:
        verdict = "inconclusive"
    elif limit <= 1 - epsilon:
        verdict = "equal-ideals"
    else:
        verdict = "unequal-ideals"
    policy = {"horizon": str(horizon), "window": window, "epsilon": epsilon,
              "points": len(grid)}
    evidence = {"tail_mean": float(a), "tail_max": float(hi), "tail_min": float(lo),
                "oscillation": oscillation, "extrapolated_limit": limit,
                "limit_exists": oscillation <= epsilon}
    return CriterionVerdict("theorem2-ratio", verdict, a, (), policy, evidence)


def lemma1_check(m, k_max: int, horizon: int = 10**6, tol: float = 1e-6,
                 epsilon: float = THEOREM2_EPSILON,
                 window: float = DEFAULT_WINDOW) -> CriterionVerdict:
    """Check g_f(k) = a^k for k = 1..k_max, where a = lim f(n)/f(2n).

    Raises PreconditionError when the ratio oscillates, since the identity
    presupposes that the limit exists.
    """
    if k_max < 1:
        raise PreconditionError("k_max must be >= 1")
    base = theorem2_verdict(m, horizon, epsilon, window)
    if base.verdict == "inconclusive":
        raise PreconditionError(
            "Lemma 1 hypothesis not met: lim f(n)/f(2n) does not appear to exist "
            f"(tail oscillation {base.evidence['oscillation']:.3g} > {epsilon})")
    a = base.a
    estimates, deviations = [], []
    for k in range(1, k_max + 1):
        est = estimate_g(m, k, horizon, window)
        g = est.estimate.value
        if isinstance(g, (int, Fraction)) and isinstance(a, Fraction):
            dev = abs(Fraction(g) - a ** k)
        else:
            dev = abs(float(g) - float(a) ** k)
        estimates.append(est)
        deviations.append(dev)
    worst = max(deviations)
    passed = worst <= tol
    if not passed:
        verdict = "inconclusive"
    else:
        verdict = "equal-ideals" if a < 1 else "unequal-ideals"
    policy = {"horizon": str(horizon), "window": window, "k_max": k_max, "tol": tol,
              "epsilon": epsilon}
    evidence = {"deviations": [float(d) for d in deviations], "worst_deviation": float(worst),
                "a_power_k": [float(a) ** k for k in range(1, k_max + 1)]}
    return CriterionVerdict("lemma1-consistency", verdict, a, tuple(estimates), policy,
                            evidence, passed)


def theorem1_trend(m, k_max: int = 10, horizon: int = 10**6,
                   window: float = DEFAULT_WINDOW, final_threshold: float = FINAL_G_THRESHOLD,
                   floor: float = G_FLOOR, tol: float = TREND_TOL) -> CriterionVerdict:
    """Read the trend of g_f(1), ..., g_f(k_max).

    Equal ideals when the estimates are non-increasing and the last one is
    below ``final_threshold``.  Unequal when all stay above ``floor`` and the
    per-step decay over the second half, projected another k_max steps, still
    stays above it.
    """
    if k_max < 3:
        raise PreconditionError(f"k_max must be >= 3, got {k_max}")
    if horizon < (1 << k_max) * 100:
        raise PreconditionError(
            f"horizon must be >= 2^k_max * 100 = {(1 << k_max) * 100}, got {horizon}")
    estimates = tuple(estimate_g(m, k, horizon, window) for k in range(1, k_max + 1))
    vals = [float(e.estimate) for e in estimates]
    nonincreasing = all(b <= a + tol for a, b in zip(vals, vals[1:]))
    k_mid = (k_max + 1) // 2
    g_mid, g_last = vals[k_mid - 1], vals[-1]
    if g_mid > 0 and g_last > 0:
        step = (g_last / g_mid) ** (1.0 / (k_max - k_mid))
        projected = g_last * step ** k_max
    else:
        step, projected = 0.0, 0.0
    if nonincreasing and g_last < final_threshold:
        verdict = "equal-ideals"
    elif min(vals) > floor and projected > floor:
        verdict = "unequal-ideals"
    else:
        verdict = "inconclusive"
    policy = {"horizon": str(horizon), "window": window, "k_max": k_max,
              "final_threshold": final_threshold, "floor": floor, "tol": tol}
    evidence = {"nonincreasing": nonincreasing, "final_estimate": g_last,
                "min_estimate": min(vals), "decay_per_step": step,
                "projected_at_2k_max": projected}
    return CriterionVerdict("theorem1-trend", verdict, None, estimates, policy, evidence)

import csv
import io
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from fdensity import (
    DomainError,
    ModulusDescriptor,
    PreconditionError,
    delta,
    estimate_g,
    estimate_h,
    example3_iterative,
    lemma1_check,
    ratio_sequence,
    theorem1_trend,
    theorem2_verdict,
)
from fdensity.diagnostics import ratio_sequence_csv, window_grid

LOG = ModulusDescriptor.log()
EX3 = ModulusDescriptor.example3()
HALF = ModulusDescriptor.power("1/2")
ID = ModulusDescriptor.power(1)

# ln(1+10^6)/ln(1+2^k 10^6), 60-digit oracle, frozen
LOG_G_AT_1E6 = (0.95223, 0.90881, 0.86918, 0.83286, 0.79945, 0.76862, 0.74008, 0.71359)


def example3_brute_max(k, lo_exp, hi_exp):
    f = oracles.example3_table(hi_exp + k)
    n = range(1 << lo_exp, (1 << hi_exp) + 1)
    return max(Fraction(int(f[x]), int(f[x << k])) for x in n)


class TestRatioSequence:
    def test_identity_five(self):
        seq = ratio_sequence(ID, 5, [1, 17, 10**30])
        assert all(r.value == Fraction(1, 5) and r.is_exact for _, r in seq)

    def test_sqrt_doubling(self):
        (_, r), = ratio_sequence(HALF, 2, [10**6])
        assert abs(float(r) - 2**-0.5) <= 1e-9

    def test_log_doubling(self):
        (_, r), = ratio_sequence(LOG, 2, [10**6])
        ref = oracles.ln1p(10**6) / oracles.ln1p(2 * 10**6)
        assert oracles.rel_diff(r.value, ref) <= max(r.rel_error, 1e-15)
        assert abs(float(r) - 0.95223) <= 1e-5

    def test_non_integer_t(self):
        (_, r), = ratio_sequence(LOG, Fraction(3, 2), [1001])
        ref = oracles.ln1p(1001) / oracles.ln1p(Fraction(3003, 2))
        assert oracles.rel_diff(r.value, ref) <= 1e-12

    @pytest.mark.parametrize("t", [0, Fraction(1, 2), -3, float("nan"), "x"])
    def test_t_below_one(self, t):
        with pytest.raises(DomainError):
            ratio_sequence(LOG, t, [10])

    def test_log_base_invariance(self):
        grid = [1, 10, 999, 10**6, 10**20]
        for n, r in ratio_sequence(LOG, 3, grid):
            ref = oracles.mp.log10(1 + n) / oracles.mp.log10(1 + 3 * n)
            assert oracles.rel_diff(r.value, ref) <= 1e-12

    def test_csv(self):
        text = ratio_sequence_csv(ratio_sequence(ID, 4, [2, 3]))
        rows = list(csv.reader(io.StringIO(text)))
        assert rows == [["n", "ratio", "ratio_err"], ["2", "0.25", "0"], ["3", "0.25", "0"]]


class TestWindow:
    def test_contains_both_ends(self):
        g = window_grid(10**6, 0.5)
        assert g[0] == 500_000 and g[-1] == 10**6

    @pytest.mark.parametrize("h,w", [(99, 0.5), (1000, 0), (1000, 1.5)])
    def test_rejects(self, h, w):
        with pytest.raises(PreconditionError):
            window_grid(h, w)


class TestEstimates:
    def test_identity_h4(self):
        est = estimate_h(ID, 4, 10**5, 0.5)
        assert est.estimate.value == Fraction(1, 4)
        assert est.argmax_n == 50_000

    def test_example3_h2_is_one_at_odd_power(self):
        est = estimate_h(EX3, 2, 2**20, 0.5)
        assert est.estimate.value == 1
        j = est.argmax_n.bit_length() - 1
        assert est.argmax_n == 2**j and j % 2 == 1

    def test_log_h2_at_horizon(self):
        est = estimate_h(LOG, 2, 10**6, 0.5)
        assert est.argmax_n == 10**6
        assert abs(float(est.estimate) - 0.95223) <= 1e-5

    def test_sqrt_g4(self):
        assert abs(float(estimate_g(HALF, 4, 10**6).estimate) - 0.25) <= 1e-9

    def test_example3_g2(self):
        est = estimate_g(EX3, 2, 2**22, 0.5)
        assert est.estimate.value == Fraction(1, 2)
        assert est.k == 2

    @pytest.mark.parametrize("horizon", [100, 10**4, 10**9])
    def test_identity_g3(self, horizon):
        assert estimate_g(ID, 3, horizon).estimate.value == Fraction(1, 8)

    @pytest.mark.parametrize("k", [0, -1, True, 1.5])
    def test_bad_k(self, k):
        with pytest.raises(DomainError):
            estimate_g(LOG, k, 1000)

    @pytest.mark.parametrize("k", range(1, 9))
    def test_log_g_values(self, k):
        ref = float(oracles.ln1p(10**6) / oracles.ln1p(10**6 << k))
        got = float(estimate_g(LOG, k, 10**6).estimate)
        assert abs(got - ref) <= 1e-12
        assert abs(got - LOG_G_AT_1E6[k - 1]) <= 1e-5

    @pytest.mark.parametrize("k", range(1, 7))
    def test_example3_g_against_brute_force(self, k):
        # the tail of the table over [2^10, 2^12] with window 1/4
        ref = example3_brute_max(k, 10, 12)
        assert ref == Fraction(1, 2 ** (k // 2))
        assert estimate_g(EX3, k, 2**12, 0.25).estimate.value == ref

    def test_delta_identity(self):
        assert delta(ID, 2, 1000).value == 1

    def test_delta_sqrt(self):
        assert abs(float(delta(HALF, 4, 10**6)) - 0.75) <= 1e-9

    def test_delta_log(self):
        assert abs(float(delta(LOG, 2, 10**6)) - 1.45223) <= 1e-5

    def test_json(self):
        js = estimate_g(ID, 2, 1000).to_json()
        assert js["k"] == 2 and js["value"] == 0.25 and js["argmax_n"] == "500"


class TestInvariants:
    @settings(max_examples=30, deadline=None)
    @given(st.sampled_from([LOG, HALF, EX3, ModulusDescriptor.power("1/3")]),
           st.integers(1, 64), st.integers(1, 64))
    def test_monotone_in_t(self, m, t1, t2):
        t1, t2 = sorted((t1, t2))
        h1 = estimate_h(m, t1, 5000).estimate
        h2 = estimate_h(m, t2, 5000).estimate
        assert float(h1) >= float(h2) * (1 - 1e-12)

    @pytest.mark.parametrize("m", [LOG, HALF, EX3])
    @pytest.mark.parametrize("k", [1, 3, 6])
    def test_g_is_h_of_power_of_two(self, m, k):
        g, h = estimate_g(m, k, 20_000), estimate_h(m, 2**k, 20_000)
        assert g.estimate == h.estimate and g.argmax_n == h.argmax_n

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 10**6), st.integers(100, 10**6))
    def test_identity_gives_reciprocal(self, t, horizon):
        assert estimate_h(ID, t, horizon).estimate.value == Fraction(1, t)

    @settings(max_examples=20, deadline=None)
    @given(st.sampled_from([LOG, HALF, EX3, ID]), st.integers(1, 100))
    def test_delta_minus_h(self, m, t):
        d = delta(m, t, 3000)
        h = estimate_h(m, t, 3000).estimate
        assert d.as_fraction() - h.as_fraction() == Fraction(1, t)
        assert float(d) >= float(h)

    @pytest.mark.parametrize("m", [LOG, HALF, EX3])
    def test_argmax_reproduces(self, m):
        est = estimate_h(m, 8, 50_000)
        (_, r), = ratio_sequence(m, 8, [est.argmax_n])
        assert r == est.estimate

    def test_tie_breaks_to_smallest_n(self):
        # Example 3 attains the ratio 1 at many grid points inside the window
        est = estimate_h(EX3, 2, 2**20, 1 / 64)
        seq = ratio_sequence(EX3, 2, window_grid(2**20, 1 / 64))
        hits = [n for n, r in seq if r.value == 1]
        assert len(hits) > 1 and est.argmax_n == hits[0]

    def test_order_independent(self):
        a = [estimate_g(HALF, k, 10**5) for k in (3, 1, 2)]
        b = [estimate_g(HALF, k, 10**5) for k in (1, 2, 3)]
        assert sorted(a, key=lambda e: e.k) == b


class TestTheorem2:
    def test_sqrt_equal(self):
        v = theorem2_verdict(HALF, 10**6, 0.01)
        assert v.verdict == "equal-ideals"
        assert abs(float(v.a) - 2**-0.5) <= 1e-9

    @pytest.mark.parametrize("p", ["1/4", "1"])
    def test_other_powers(self, p):
        v = theorem2_verdict(ModulusDescriptor.power(p), 10**6)
        assert v.verdict == "equal-ideals"
        assert abs(float(v.a) - 2 ** -float(Fraction(p))) <= 1e-9

    def test_log_unequal(self):
        v = theorem2_verdict(LOG, 10**6, 0.01)
        assert v.verdict == "unequal-ideals"
        assert 0.95 <= float(v.a) < 0.953
        assert v.evidence["extrapolated_limit"] > 0.99

    def test_example3_inconclusive(self):
        v = theorem2_verdict(EX3, 2**20, 0.01)
        assert v.verdict == "inconclusive"
        assert abs(v.evidence["oscillation"] - 0.5) <= 0.01

    def test_json_shape(self):
        js = theorem2_verdict(HALF, 10**4).to_json()
        assert js["criterion"] == "theorem2-ratio"
        assert set(js) >= {"criterion", "verdict", "a", "estimates", "policy"}
        assert js["policy"]["epsilon"] == 0.01

    @pytest.mark.parametrize("eps", [0, 0.5, -1])
    def test_bad_epsilon(self, eps):
        with pytest.raises(PreconditionError):
            theorem2_verdict(LOG, 1000, eps)


class TestLemma1:
    def test_sqrt_pass(self):
        v = lemma1_check(HALF, 10, 10**6, 1e-6)
        assert v.passed and v.evidence["worst_deviation"] < 1e-9

    def test_identity_exact(self):
        v = lemma1_check(ID, 8, 10**4, 0)
        assert v.passed and v.evidence["worst_deviation"] == 0

    def test_example3_precondition(self):
        with pytest.raises(PreconditionError, match="Lemma 1"):
            lemma1_check(EX3, 4, 2**16)

    def test_log_fails_at_tight_tolerance(self):
        v = lemma1_check(LOG, 4, 10**5, 1e-6)
        assert not v.passed and v.verdict == "inconclusive"


class TestTheorem1:
    def test_sqrt_equal(self):
        v = theorem1_trend(HALF, 10, 10**6)
        assert v.verdict == "equal-ideals"
        for k, e in enumerate(v.estimates, start=1):
            assert abs(float(e.estimate) - 2 ** (-k / 2)) <= 1e-9

    def test_example3_equal(self):
        v = theorem1_trend(EX3, 10, 2**24)
        assert v.verdict == "equal-ideals"
        vals = [e.estimate.value for e in v.estimates]
        assert vals == [Fraction(1, 2 ** (k // 2)) for k in range(1, 11)]
        assert vals[-1] <= 0.1

    def test_log_unequal(self):
        v = theorem1_trend(LOG, 8, 10**6)
        assert v.verdict == "unequal-ideals"
        assert all(float(e.estimate) > 0.7 for e in v.estimates)

    def test_preconditions(self):
        with pytest.raises(PreconditionError):
            theorem1_trend(LOG, 2, 10**6)
        with pytest.raises(PreconditionError):
            theorem1_trend(LOG, 10, 10**5)

    def test_json_estimates(self):
        js = theorem1_trend(ID, 3, 1000).to_json()
        assert [e["k"] for e in js["estimates"]] == [1, 2, 3]
        assert js["a"] is None and js["policy"]["floor"] == 0.1


def test_example3_oracle_routes_agree():
    f = oracles.example3_table(14)
    assert all(int(f[n]) == example3_iterative(n) for n in range(0, len(f), 7))

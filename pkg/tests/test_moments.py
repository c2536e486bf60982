import math

import numpy as np
import pytest
import scipy.stats as ss
from hypothesis import given, settings
from hypothesis import strategies as st

from cumord.core import Quadratic, factorial_power
from cumord.errors import DegenerateRecurrenceError, MomentBudgetError
from cumord.family import OrdModel, derive_distribution
from cumord.moments import (
    ascending_factorial_moments,
    derived_variance,
    descending_factorial_moments,
    fmt,
    moment_table,
    norm_constant_A,
    raw_from_descending,
    stirling2,
    variance,
)
from cumord.oracle import brute_expectation, brute_factorial_moment


def _scale(model, r, mode):
    # E|falling or rising factorial|; the natural scale when the moment itself vanishes
    v = brute_expectation(model, lambda j: np.abs(factorial_power(j.astype(float), r, mode))).value
    return v or 1.0


class TestRecurrences:
    def test_poisson_falling_moments(self):
        m = OrdModel.from_type("poisson", lam=2.0)
        np.testing.assert_allclose(descending_factorial_moments(m, 8), [2.0**r for r in range(9)], rtol=1e-12)

    def test_binomial_falling_moments(self):
        m = OrdModel.from_type("binomial", N=6, p=0.3)
        want = [math.perm(6, r) * 0.3**r for r in range(9)]
        # orders past N vanish; the recurrence leaves rounding on the scale of N_(r)
        np.testing.assert_allclose(descending_factorial_moments(m, 8), want, rtol=1e-12, atol=1e-11)

    def test_negbin_rising_mean(self):
        m = OrdModel.from_type("negbin", r=1.5, p=0.4)
        asc = ascending_factorial_moments(m, 2)
        dist = ss.nbinom(1.5, 0.4)
        assert asc[1] == pytest.approx(dist.mean(), rel=1e-12)
        assert asc[2] == pytest.approx(dist.moment(2) + dist.mean(), rel=1e-12)

    @pytest.mark.parametrize("mode", ["descending", "ascending"])
    def test_against_direct_summation(self, registry, mode):
        fn = descending_factorial_moments if mode == "descending" else ascending_factorial_moments
        for name, m in registry.items():
            R = 6 if m.moment_budget.allows(6) else int(math.ceil(m.moment_budget.max_finite_order) - 1)
            got = fn(m, R)
            for r in range(R + 1):
                want = brute_factorial_moment(m, r, mode)
                assert abs(got[r] - want) <= 1e-9 * _scale(m, r, mode), (name, r)

    def test_degenerate_division_is_reported(self):
        # delta = 1/2 makes 1 - (r-1) delta vanish at r = 3
        m = OrdModel.build(0.5, Quadratic(0.5, -1.0, 0.5))
        with pytest.raises(DegenerateRecurrenceError):
            descending_factorial_moments(m, 3)

    def test_budget_enforced(self, registry):
        with pytest.raises(MomentBudgetError):
            descending_factorial_moments(registry["inverse_polya"], 30)

    def test_raw_moments(self, registry):
        m = registry["negbin"]
        tab = moment_table(m, 5)
        for r in range(6):
            want = brute_expectation(m, lambda j, r=r: j.astype(float) ** r).value
            assert tab.raw[r] == pytest.approx(want, rel=1e-10)


class TestStirling:
    def test_small_table(self):
        s = stirling2(4)
        assert s[4][1:] == [1, 7, 6, 1]

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-5, 5), st.integers(0, 7))
    def test_power_identity(self, x, n):
        # x^n = sum_k S(n,k) x_(k)
        desc = [factorial_power(x, k) for k in range(n + 1)]
        assert raw_from_descending(desc)[n] == pytest.approx(x**n, rel=1e-9, abs=1e-9)


class TestVarianceAndA:
    def test_variance(self, registry):
        for name, m in registry.items():
            want = brute_expectation(m, lambda j: (j - m.mu) ** 2).value
            assert variance(m) == pytest.approx(want, rel=1e-10), name

    def test_norm_constants(self, registry):
        for name, m in registry.items():
            for k in range(int(min(4, m.max_order)) + 1):
                if not m.moment_budget.allows(2 * k):
                    break
                want = brute_expectation(m, lambda j, k=k: m.q_rising(k, j)).value
                assert norm_constant_A(m, k) == pytest.approx(want, rel=1e-9), (name, k)

    def test_derived_variance(self, registry):
        for name, m in registry.items():
            for i in range(int(min(3, m.max_order - 1)) + 1):
                if not m.moment_budget.allows(2 * i + 3):
                    break
                assert derived_variance(m, i) == pytest.approx(variance(derive_distribution(m, i)), rel=1e-10)
                # A_{i+1} / A_i = (1 - 2 i delta) Var X_i
                ratio = norm_constant_A(m, i + 1) / norm_constant_A(m, i)
                assert ratio == pytest.approx((1 - 2 * i * m.delta) * derived_variance(m, i), rel=1e-10)


class TestOutput:
    def test_fmt_round_trips(self):
        for x in (1 / 3, 1e-300, -2.5e17, 0.1):
            assert float(fmt(x)) == x
        assert fmt(-0.0) == "0"

    def test_csv_is_deterministic(self, registry):
        a = moment_table(registry["poisson"], 4).to_csv()
        b = moment_table(OrdModel.from_type("poisson", lam=2.0), 4).to_csv()
        assert a == b
        assert a.splitlines()[0] == "order,descending,ascending,raw"

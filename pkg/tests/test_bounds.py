"""Probability bound formulas against high-precision recomputation."""

import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from fewpatch import (
    BoundInputs,
    delta_cap,
    lemma1_A1_bound,
    lemma1_A1A2_bound,
    lemma2_interval,
    lemma2_prob_bounds,
    pe_bound,
    theorem2_bounds,
)
from fewpatch.bounds import BoundValue
from fewpatch.errors import ContractViolationError, DeltaNotPositiveError

mpmath.mp.dps = 50


def mp_pe(theta, n, c_x=1, r=1) -> float:
    t = mpmath.mpf(theta)
    return float(1 - mpmath.mpf(c_x) / 2 * (r * mpmath.sqrt(1 - t * t)) ** n)


def mp_a1(n, k, delta, rho=1, v=1, c_new=1) -> float:
    d = mpmath.mpf(delta)
    pairs = mpmath.mpf(k) * (k - 1) / 2
    return float(1 - c_new * pairs * (rho * v * mpmath.sqrt(1 - d * d)) ** n)


def mp_a1a2(n, k, delta, eps, rho=1, v=1, c_new=1) -> float:
    d = mpmath.mpf(delta)
    pairs = mpmath.mpf(k) * (k - 1) / 2
    norm_term = c_new * k * (rho * v * (1 - mpmath.mpf(eps))) ** n
    pair_term = c_new * pairs * (rho * v * mpmath.sqrt(1 - d * d)) ** n
    return float(1 - norm_term - pair_term)


class TestBoundValue:
    def test_clamp_and_vacuity(self):
        assert BoundValue.from_raw(-0.5) == BoundValue(-0.5, 0.0, True)
        assert BoundValue.from_raw(0.0).vacuous
        assert not BoundValue.from_raw(1e-300).vacuous
        assert BoundValue.from_raw(0.3).clamped == 0.3
        assert BoundValue.from_raw(1.5).clamped == 1.0


class TestPeBound:
    def test_against_mpmath(self):
        for theta in [0.0, 0.1, 0.5, 0.7, 0.9, 0.99]:
            for n in [1, 2, 10, 20, 50, 200]:
                assert pe_bound(theta, n).raw == pytest.approx(
                    mp_pe(theta, n), rel=1e-13
                )

    def test_reference_point(self):
        got = pe_bound(0.7, 20)
        assert got.raw == pytest.approx(1.0 - 0.5 * 0.51**10, rel=1e-15)
        assert round(got.raw, 5) == 0.99940

    def test_theta_at_and_beyond_one(self):
        assert pe_bound(1.0, 7).raw == 1.0
        assert pe_bound(1.3, 7).raw == 1.0
        assert not pe_bound(2.0, 7).vacuous

    def test_certified_constants_scale(self):
        assert pe_bound(0.5, 4, c_x=2.0).raw == pytest.approx(
            mp_pe(0.5, 4, c_x=2), rel=1e-14
        )
        assert pe_bound(0.5, 4, r=0.5).raw == pytest.approx(
            mp_pe(0.5, 4, r=0.5), rel=1e-14
        )

    def test_negative_theta_rejected(self):
        with pytest.raises(ContractViolationError):
            pe_bound(-0.1, 5)

    @given(
        n=st.integers(min_value=1, max_value=500),
        lo=st.floats(min_value=0.0, max_value=1.0),
        hi=st.floats(min_value=0.0, max_value=1.0),
    )
    @settings(max_examples=150, deadline=None)
    def test_monotone_in_theta(self, n, lo, hi):
        if lo > hi:
            lo, hi = hi, lo
        assert pe_bound(lo, n).raw <= pe_bound(hi, n).raw + 1e-15


class TestLemma1:
    def test_reference_values(self):
        assert lemma1_A1_bound(50, 10, 0.5).raw == pytest.approx(
            0.9661355443825751, rel=1e-15
        )
        assert lemma1_A1A2_bound(50, 10, 0.5, 0.1).raw == pytest.approx(
            0.9145977923093739, rel=1e-15
        )

    def test_against_mpmath(self):
        for n in [1, 5, 50, 300]:
            for k in [1, 2, 10]:
                for delta in [0.1, 0.5, 0.9]:
                    assert lemma1_A1_bound(n, k, delta).raw == pytest.approx(
                        mp_a1(n, k, delta), rel=1e-12, abs=1e-12
                    )
                    assert lemma1_A1A2_bound(n, k, delta, 0.1).raw == pytest.approx(
                        mp_a1a2(n, k, delta, 0.1), rel=1e-12, abs=1e-12
                    )

    def test_k1_is_trivial(self):
        assert lemma1_A1_bound(10, 1, 0.5).raw == 1.0

    def test_conjunction_never_exceeds_a1(self):
        for n in [2, 20, 100]:
            assert (
                lemma1_A1A2_bound(n, 5, 0.3, 0.2).raw <= lemma1_A1_bound(n, 5, 0.3).raw
            )

    def test_huge_n_saturates(self):
        got = lemma1_A1_bound(10**6, 10, 0.5)
        assert got.raw == 1.0 and not got.vacuous

    def test_expanding_density_goes_vacuous(self):
        got = lemma1_A1_bound(10**6, 2, 0.5, rho=2.0)
        assert got.raw == -math.inf
        assert got.vacuous and got.clamped == 0.0

    @given(
        k=st.integers(min_value=2, max_value=40),
        delta=st.floats(min_value=0.01, max_value=0.99),
        n=st.integers(min_value=1, max_value=400),
        step=st.integers(min_value=1, max_value=100),
    )
    @settings(max_examples=150, deadline=None)
    def test_monotone_in_n(self, k, delta, n, step):
        assert lemma1_A1_bound(n, k, delta).raw <= (
            lemma1_A1_bound(n + step, k, delta).raw + 1e-15
        )

    @pytest.mark.parametrize("delta", [0.0, 1.0, -0.2, 1.2])
    def test_delta_domain(self, delta):
        with pytest.raises(ContractViolationError):
            lemma1_A1_bound(5, 3, delta)


class TestLemma2:
    def test_interval_algebra(self):
        lower, upper = lemma2_interval(10, 1.0, 0.5, 0.1)
        assert upper == pytest.approx(1.0 / 10 + 0.9 * 0.5, rel=1e-15)
        assert lower == pytest.approx(0.81 / 10 - 0.9 * 0.5, rel=1e-15)

    def test_interval_k1_has_no_cross_term(self):
        lower, upper = lemma2_interval(1, 2.0, 0.5, 0.25)
        assert upper == 4.0
        assert lower == pytest.approx(0.75**2 * 4.0, rel=1e-15)

    def test_prob_bounds_reuse_lemma1(self):
        two, up = lemma2_prob_bounds(50, 10, 0.5, 0.1)
        assert two.raw == lemma1_A1A2_bound(50, 10, 0.5, 0.1).raw
        assert up.raw == lemma1_A1_bound(50, 10, 0.5).raw

    @given(
        k=st.integers(min_value=1, max_value=50),
        v=st.floats(min_value=0.05, max_value=20.0),
        delta=st.floats(min_value=0.01, max_value=0.99),
        eps=st.floats(min_value=0.01, max_value=0.99),
    )
    @settings(max_examples=150, deadline=None)
    def test_interval_ordered(self, k, v, delta, eps):
        lower, upper = lemma2_interval(k, v, delta, eps)
        assert lower < upper
        assert upper >= v * v / k * (1.0 - 1e-12)
        if delta <= v:
            # The mean stays inside the sampling ball exactly when the
            # inner-product cap delta*v does not exceed v^2.
            assert upper <= v * v * (1.0 + 1e-12)


class TestDeltaCap:
    def test_defining_equation(self):
        for m in [0.0, 0.5, 2.0]:
            for k in [1, 5]:
                _, upper = lemma2_interval(k, 1.0, 0.3, 0.5)
                assert delta_cap(m, k, 1.0, 0.3) == pytest.approx(
                    m - math.sqrt(upper), rel=1e-14, abs=1e-14
                )

    def test_reference_point(self):
        assert delta_cap(2.0, 5, 1.0, 0.3) == pytest.approx(
            2.0 - math.sqrt(0.44), rel=1e-15
        )

    def test_negative_norm_rejected(self):
        with pytest.raises(ContractViolationError):
            delta_cap(-1.0, 5, 1.0, 0.3)


class TestTheorem2:
    def reference_inputs(self, n=200, theta=None):
        d = 2.0 - math.sqrt(0.44)
        if theta is None:
            theta = d - 0.4
        return BoundInputs(n=n, k=5, v=1.0, delta=0.3, theta=theta, norm_mean=2.0)

    def test_reference_value(self):
        got = theorem2_bounds(self.reference_inputs())
        cap = 1 - mpmath.mpf(1) / 2 * mpmath.sqrt(1 - mpmath.mpf("0.4") ** 2) ** 200
        pairs = 1 - 10 * mpmath.sqrt(1 - mpmath.mpf("0.3") ** 2) ** 200
        assert got.new_label.raw == pytest.approx(float(cap * pairs), rel=1e-12)
        assert round(got.new_label.raw, 5) == 0.99920

    def test_factors_exposed(self):
        got = theorem2_bounds(self.reference_inputs())
        assert got.new_label.raw == pytest.approx(
            got.factor_cap * got.factor_pairs, rel=1e-15
        )
        assert got.theta_hi == pytest.approx(got.delta_cap, rel=1e-15)
        assert got.theta_lo == pytest.approx(got.delta_cap - 1.0, rel=1e-12)

    def test_low_dimension_goes_vacuous(self):
        got = theorem2_bounds(self.reference_inputs(n=30))
        assert got.new_label.raw < 0.0
        assert got.new_label.vacuous

    def test_combine_keeps_clamped_product(self):
        got = theorem2_bounds(self.reference_inputs(n=30))
        clamp = lambda x: min(1.0, max(0.0, x))  # noqa: E731
        assert got.new_label.clamped == pytest.approx(
            clamp(got.factor_cap) * clamp(got.factor_pairs), abs=1e-15
        )

    def test_base_agreement_is_pe_bound(self):
        inputs = self.reference_inputs()
        got = theorem2_bounds(inputs)
        assert got.base_agreement.raw == pe_bound(inputs.theta, inputs.n).raw

    def test_base_agreement_exact_one_beyond_ball(self):
        inputs = self.reference_inputs(theta=2.0 - math.sqrt(0.44))
        got = theorem2_bounds(inputs)
        assert got.base_agreement.raw == 1.0

    def test_nonpositive_margin_raises(self):
        bad = BoundInputs(
            n=20, k=5, v=1.0, delta=0.3, theta=0.1, norm_mean=0.2
        )
        with pytest.raises(DeltaNotPositiveError):
            theorem2_bounds(bad)

    def test_theta_outside_interval_raises(self):
        with pytest.raises(ContractViolationError):
            theorem2_bounds(self.reference_inputs(theta=2.5))

    @given(
        n=st.integers(min_value=1, max_value=300),
        k=st.integers(min_value=1, max_value=20),
        v=st.floats(min_value=0.1, max_value=3.0),
        delta=st.floats(min_value=0.05, max_value=0.95),
        mix=st.floats(min_value=0.0, max_value=1.0),
        bump=st.floats(min_value=0.01, max_value=5.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_clamped_product_property(self, n, k, v, delta, mix, bump):
        _, upper = lemma2_interval(k, v, delta, 0.5)
        norm_mean = math.sqrt(upper) + bump
        d = delta_cap(norm_mean, k, v, delta)
        lo = max(d - v, 0.0)
        theta = lo + mix * (d - lo)
        got = theorem2_bounds(
            BoundInputs(n=n, k=k, v=v, delta=delta, theta=theta, norm_mean=norm_mean)
        )
        clamp = lambda x: min(1.0, max(0.0, x))  # noqa: E731
        assert got.new_label.clamped == pytest.approx(
            clamp(got.factor_cap) * clamp(got.factor_pairs), abs=1e-12
        )
        assert got.new_label.vacuous == (got.new_label.raw <= 0.0)

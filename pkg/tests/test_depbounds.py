import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from outagebounds import depbounds, oracle
from outagebounds.depbounds import (
    CBranch,
    PhiBranch,
    big_phi,
    big_phi_minus,
    c_min,
    h_a,
    phi,
    phi_minus,
    worst_case_tail,
    zero_branch_threshold,
)
from outagebounds.errors import DivergenceError, DomainError, UnsupportedDistributionError
from outagebounds.marginals import (
    ExponentialMarginal,
    QuantileTableMarginal,
    ShiftedMarginal,
    UniformMarginal,
    integrated_quantile,
)

EXP1 = ExponentialMarginal(1.0)
LN2 = math.log(2.0)

# independent high-precision values: mpmath quadrature of H_a plus root finding on
# the raw defining integral inequality
C_MIN_REF = {
    (2, 0.0): 0.5,
    (3, 0.0): 0.0945415777881042,
    (5, 0.0): 0.00795969801109928,
    (10, 0.0): 4.55886618515726e-5,
    (5, 0.1): 0.00716372820998936,
    (3, 0.5): 0.0472707888940521,
}
PHI_REF = {
    (2, 0.0): 1.38629436111989,
    (3, 0.0): 2.77789509413607,
    (5, 0.0): 4.96279089185808,
    (10, 0.0): 9.99954495533386,
    (2, 0.1): 1.59701539243554,
    (5, 0.1): 5.48959347014721,
    (3, 0.5): 4.85733663581591,
}


def _gap(m, n, a, c):
    return depbounds._gap_fn(m, n, a, "auto")(c)


class TestHa:
    def test_two_link_value(self):
        assert h_a(EXP1, 2, 0.0, 0.5) == pytest.approx(2 * LN2, abs=1e-15)

    def test_right_endpoint(self):
        for m in (EXP1, UniformMarginal(), ExponentialMarginal(3.0)):
            for n, a in ((2, 0.0), (5, 0.3), (7, 0.9)):
                b = (1 - a) / n
                assert h_a(m, n, a, b) == pytest.approx(n * float(m.quantile(1 - b)), rel=1e-12)

    def test_five_links(self):
        expected = 4 * -math.log(0.96) - math.log(0.01)
        assert h_a(EXP1, 5, 0.0, 0.01) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(4.768, abs=1e-3)

    def test_negated_identity(self):
        neg = EXP1.negate()
        for n, a, x in ((3, 0.2, 0.1), (5, 0.0, 0.05), (10, 0.5, 0.01)):
            expected = -(float(EXP1.quantile(1 - a - x)) + (n - 1) * float(EXP1.quantile((n - 1) * x)))
            assert h_a(neg, n, a, x) == pytest.approx(expected, rel=1e-12)

    def test_vectorised(self):
        xs = np.linspace(0.01, 0.2, 5)
        out = h_a(EXP1, 5, 0.0, xs)
        assert out.shape == (5,)
        assert out[2] == pytest.approx(h_a(EXP1, 5, 0.0, xs[2]))

    @pytest.mark.parametrize("x", [-0.01, 0.51])
    def test_domain(self, x):
        with pytest.raises(DomainError):
            h_a(EXP1, 2, 0.0, x)

    def test_n_too_small(self):
        with pytest.raises(DomainError):
            h_a(EXP1, 1, 0.0, 0.1)


class TestCmin:
    def test_two_link_example(self):
        sol = c_min(EXP1, 2, 0.0)
        assert sol.c == pytest.approx(0.5, abs=1e-9)
        assert sol.branch is CBranch.POSITIVE

    @pytest.mark.parametrize("key", sorted(C_MIN_REF))
    def test_reference_values(self, key):
        n, a = key
        assert c_min(EXP1, n, a).c == pytest.approx(C_MIN_REF[key], abs=1e-9, rel=1e-8)

    @pytest.mark.parametrize("a", [1.0, 1 - 1e-13])
    def test_collapsed_interval(self, a):
        sol = c_min(EXP1, 4, a)
        assert sol.c == 0.0 and sol.branch is CBranch.ZERO

    def test_near_one(self):
        sol = c_min(EXP1, 5, 0.999)
        assert 0.0 <= sol.c <= 0.001 / 5

    def test_rate_invariance(self):
        # scaling the gain does not move c
        for n, a in ((3, 0.0), (5, 0.2)):
            assert c_min(ExponentialMarginal(4.0), n, a).c == pytest.approx(c_min(EXP1, n, a).c, rel=1e-9)

    def test_uniform_zero_branch(self):
        for n in range(2, 11):
            assert c_min(UniformMarginal(), n, 0.0).branch is CBranch.ZERO

    @pytest.mark.parametrize("n,a", [(2, 0.0), (3, 0.0), (5, 0.1), (10, 0.0), (3, 0.6), (4, 0.3)])
    def test_closed_form_matches_quadrature(self, n, a):
        closed = c_min(EXP1, n, a, method="closed-form").c
        quad = c_min(EXP1, n, a, method="quadrature").c
        assert closed == pytest.approx(quad, abs=1e-6)

    @pytest.mark.parametrize("n,a", [(2, 0.0), (3, 0.0), (5, 0.1), (10, 0.0), (3, 0.6)])
    def test_closed_form_matches_integrated_quantile(self, n, a):
        closed = c_min(EXP1, n, a, method="closed-form").c
        assert c_min(EXP1, n, a, method="integrated-quantile").c == pytest.approx(closed, abs=1e-9)
        neg = EXP1.negate()
        closed = c_min(neg, n, a + 0.01, method="closed-form").c
        assert c_min(neg, n, a + 0.01, method="integrated-quantile").c == pytest.approx(closed, abs=1e-9)

    @pytest.mark.parametrize("n,a", [(3, 0.05), (10, 1e-5), (3, 0.5), (10, 0.2)])
    def test_negated_closed_form_matches_quadrature(self, n, a):
        neg = EXP1.negate()
        closed = c_min(neg, n, a, method="closed-form")
        quad = c_min(neg, n, a, method="quadrature")
        assert closed.branch == quad.branch
        assert closed.c == pytest.approx(quad.c, abs=1e-6)

    def test_table_marginal_uses_quadrature(self):
        p = np.linspace(0.0, 1.0, 2001)[:-1]
        table = QuantileTableMarginal(np.append(p, 1.0), np.append(-np.log1p(-p), 12.0))
        # tabulated Exp(1) with a truncated top reproduces c_3(0) closely
        assert c_min(table, 3, 0.0).c == pytest.approx(C_MIN_REF[(3, 0.0)], rel=2e-2)

    def test_closed_form_requires_exponential(self):
        with pytest.raises(DomainError):
            c_min(UniformMarginal(), 3, 0.0, method="closed-form")
        with pytest.raises(DomainError):
            c_min(EXP1, 3, 0.0, method="bogus")

    def test_mixed_list_refused(self):
        with pytest.raises(DomainError):
            c_min([EXP1, ExponentialMarginal(2.0)], 2, 0.0)
        assert c_min([EXP1, EXP1], 2, 0.0).c == pytest.approx(0.5, abs=1e-9)

    @given(st.integers(2, 12), st.floats(0.0, 0.999))
    def test_invariants(self, n, a):
        sol = c_min(EXP1, n, a)
        b = (1 - a) / n
        assert 0.0 <= sol.c <= b
        assert (sol.branch is CBranch.ZERO) == (sol.c <= depbounds.C_ZERO_TOL)
        scale = b * abs(float(depbounds._h(EXP1, n, a, max(sol.c, depbounds.C_PROBE))))
        # inequality holds at c ...
        assert _gap(EXP1, n, a, max(sol.c, depbounds.C_PROBE)) >= -1e-9 * scale
        # ... and fails just below it
        if sol.c > 1e-8 and sol.c < b * (1 - 1e-6):
            assert _gap(EXP1, n, a, sol.c * (1 - 1e-4)) < 0

    @given(st.integers(2, 12), st.floats(0.0, 0.999))
    def test_negated_invariants(self, n, a):
        sol = c_min(EXP1.negate(), n, a)
        assert 0.0 <= sol.c <= (1 - a) / n
        assert (sol.branch is CBranch.ZERO) == (sol.c <= depbounds.C_ZERO_TOL)


class TestZeroBranchThreshold:
    def test_known_thresholds(self):
        neg = EXP1.negate()
        assert zero_branch_threshold(neg, 3) == pytest.approx(0.117, abs=0.002)
        assert zero_branch_threshold(neg, 10) == pytest.approx(4.56e-5, abs=5e-6)

    def test_branch_flips_at_threshold(self):
        neg = EXP1.negate()
        t = zero_branch_threshold(neg, 5)
        assert c_min(neg, 5, t * 1.001).branch is CBranch.ZERO
        assert c_min(neg, 5, t * 0.999).branch is CBranch.POSITIVE

    def test_always_zero(self):
        assert zero_branch_threshold(UniformMarginal(), 4) == 0.0


class TestPhi:
    def test_two_link(self):
        v = phi(EXP1, 2, 0.0)
        assert v.value == pytest.approx(2 * LN2, abs=1e-9)
        assert v.formula_branch is PhiBranch.H_AT_CMIN
        assert float(v) == v.value

    @pytest.mark.parametrize("key", sorted(PHI_REF))
    def test_reference_values(self, key):
        n, a = key
        assert phi(EXP1, n, a).value == pytest.approx(PHI_REF[key], rel=1e-9)

    def test_five_links(self):
        assert phi(EXP1, 5, 0.0).value == pytest.approx(4.96, abs=0.005)

    @pytest.mark.parametrize("n", range(2, 11))
    def test_nlogn_cap(self, n):
        assert phi(EXP1, n, 0.0).value <= n * math.log(n) + 1e-12

    def test_closed_form_for_exponential(self):
        # -(n-1) ln(1-a-(n-1)c) - ln c
        for n, a in ((3, 0.0), (5, 0.1), (10, 0.3)):
            c = c_min(EXP1, n, a).c
            expected = -(n - 1) * math.log(1 - a - (n - 1) * c) - math.log(c)
            assert phi(EXP1, n, a).value == pytest.approx(expected, rel=1e-12)

    def test_zero_branch(self):
        v = phi(UniformMarginal(), 4, 0.0)
        assert v.formula_branch is PhiBranch.CONDITIONAL_EXPECTATION
        assert v.value == pytest.approx(2.0)
        v = phi(UniformMarginal(), 4, 0.5)
        assert v.value == pytest.approx(4 * 0.75)

    def test_increasing_branch(self):
        neg = EXP1.negate()
        v = phi(neg, 10, 1e-5)
        assert v.formula_branch is PhiBranch.H_AT_ZERO
        assert v.value == pytest.approx(math.log(1e-5), rel=1e-12)

    @pytest.mark.parametrize("m", [EXP1, UniformMarginal(), ShiftedMarginal(EXP1, 0.5)], ids=repr)
    @pytest.mark.parametrize("n", [2, 3, 5, 8])
    def test_strictly_increasing(self, m, n):
        grid = np.linspace(0.0, 0.99, 60)
        vals = [phi(m, n, a).value for a in grid]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("n", [2, 3, 5, 10])
    def test_below_big_phi(self, n):
        for a in np.linspace(0.0, 0.99, 25):
            assert phi(EXP1, n, a).value <= big_phi([EXP1] * n, a) + 1e-12

    @given(st.integers(2, 12), st.floats(0.0, 0.999), st.floats(0.1, 10))
    def test_positive(self, n, a, lam):
        assert phi(ExponentialMarginal(lam), n, a).value > 0

    @pytest.mark.parametrize("a", [1.0, -0.1])
    def test_domain(self, a):
        with pytest.raises(DomainError):
            phi(EXP1, 3, a)


class TestPhiMinus:
    @pytest.mark.parametrize("m", [EXP1, UniformMarginal(), ExponentialMarginal(0.3)], ids=repr)
    def test_at_one(self, m):
        assert phi_minus(m, 5, 1.0).value == 0.0

    def test_ten_links(self):
        assert phi_minus(EXP1, 10, 0.99).value == pytest.approx(-0.0501675050335732, rel=1e-10)

    def test_zero_branch_closed_form(self):
        for n in (3, 5, 10):
            for a in (0.2, 0.5, 0.9, 0.999):
                v = phi_minus(EXP1, n, a)
                assert v.formula_branch is PhiBranch.CONDITIONAL_EXPECTATION
                assert v.value == pytest.approx(n * (a - a * math.log(a) - 1) / (1 - a), rel=1e-10)

    def test_positive_branch(self):
        for n, a in ((3, 0.05), (10, 1e-5), (5, 1e-3)):
            v = phi_minus(EXP1, n, a)
            assert v.formula_branch is PhiBranch.H_AT_ZERO
            assert v.value == pytest.approx(math.log(a), rel=1e-12)

    def test_two_links_never_zero_branch(self):
        for a in (1e-4, 0.3, 0.9, 0.999):
            assert phi_minus(EXP1, 2, a).value == pytest.approx(math.log(a), rel=1e-12)

    def test_uniform(self):
        assert phi_minus(UniformMarginal(), 4, 0.3).value == pytest.approx(-1.4)
        assert phi_minus(UniformMarginal(), 4, 0.0).value == pytest.approx(-2.0)

    @given(st.integers(2, 12), st.floats(1e-6, 1.0))
    def test_nonpositive(self, n, a):
        assert phi_minus(EXP1, n, a).value <= 0.0

    def test_unbounded_at_zero(self):
        with pytest.raises(DivergenceError):
            phi_minus(EXP1, 3, 0.0)

    def test_rejects_shifted_support(self):
        with pytest.raises(UnsupportedDistributionError):
            phi_minus(UniformMarginal(1.0, 2.0), 3, 0.5)

    def test_rejects_increasing(self):
        with pytest.raises(UnsupportedDistributionError):
            phi_minus(EXP1.negate(), 3, 0.5)


class TestBigPhi:
    @pytest.mark.parametrize("n", [1, 2, 5, 10])
    def test_unit_exponentials(self, n):
        assert big_phi([EXP1] * n, 0.0) == pytest.approx(n)

    def test_single(self):
        for m in (EXP1, UniformMarginal(1, 3), ExponentialMarginal(2.0)):
            assert big_phi(m, 0.0) == pytest.approx(m.mean)

    def test_heterogeneous(self):
        ms = [ExponentialMarginal(r) for r in (0.5, 2.0, 1.0, 1.0, 1.0)]
        expected = 5.5 * (1 - math.log(0.9))
        assert expected == pytest.approx(6.0795, abs=1e-4)
        assert big_phi(ms, 0.1) == pytest.approx(expected, rel=1e-12)
        quad = sum(sp_integrate.quad(lambda u, m=m: float(m.quantile(u)), 0.1, 1.0, limit=200)[0] / 0.9
                   for m in ms)
        assert big_phi(ms, 0.1) == pytest.approx(quad, rel=1e-7)

    def test_normalised_closed_form(self):
        ms = [ExponentialMarginal(r) for r in (0.5, 2.0, 2.0)]  # sum of means = 3
        for a in (0.0, 0.3, 0.9):
            assert big_phi(ms, a) == pytest.approx(3 * (1 - math.log(1 - a)), rel=1e-12)

    def test_empty(self):
        with pytest.raises(DomainError):
            big_phi([], 0.1)


class TestBigPhiMinus:
    def test_at_one(self):
        assert big_phi_minus([EXP1, ExponentialMarginal(3.0)], 1.0) == 0.0
        assert big_phi_minus([UniformMarginal(1, 2)], 1.0) == -1.0

    def test_matches_phi_minus_on_zero_branch(self):
        for n in (3, 5, 10):
            for a in (0.3, 0.8, 0.99):
                assert big_phi_minus([EXP1] * n, a) == pytest.approx(phi_minus(EXP1, n, a).value, rel=1e-12)
        assert big_phi_minus([EXP1] * 10, 0.99) == pytest.approx(-0.0502, abs=1e-4)

    def test_exponential_closed_form(self):
        rates = (0.5, 2.0, 1.0, 4.0)
        ms = [ExponentialMarginal(r) for r in rates]
        for a in (0.01, 0.5, 0.95):
            expected = (a - a * math.log(a) - 1) / (1 - a) * sum(1 / r for r in rates)
            assert big_phi_minus(ms, a) == pytest.approx(expected, rel=1e-10)

    @given(st.lists(st.floats(0.1, 10), min_size=1, max_size=6), st.floats(1e-6, 1.0))
    def test_nonpositive(self, rates, a):
        ms = [ExponentialMarginal(r) for r in rates]
        assert big_phi_minus(ms, a) <= 0.0

    @given(st.integers(2, 10), st.floats(1e-4, 0.999))
    def test_dominates_phi_minus(self, n, a):
        # phi <= Phi for the negated gain
        assert phi_minus(EXP1, n, a).value <= big_phi_minus([EXP1] * n, a) + 1e-12

    def test_domain(self):
        with pytest.raises(DomainError):
            big_phi_minus([EXP1], 0.0)


class TestWorstCaseTail:
    def test_below_phi0(self):
        for s in (0.0, 0.5, 2 * LN2):
            assert worst_case_tail(EXP1, 2, s) == 0.0

    @pytest.mark.parametrize("a", [0.05, 0.3, 0.8])
    def test_inverse_round_trip(self, a):
        for n in (2, 5):
            assert worst_case_tail(EXP1, n, phi(EXP1, n, a).value) == pytest.approx(a, abs=1e-9)

    def test_against_rearrangement(self):
        t = worst_case_tail(EXP1, 5, 6.0)
        assert 0.0 < t < 1.0
        ra = oracle.ra_extremal_quantile([EXP1] * 5, t, N=2000, seed=1)
        assert ra.converged
        assert ra.extremal_sum == pytest.approx(6.0, rel=0.02)

    def test_bounded_support_saturates(self):
        assert worst_case_tail(UniformMarginal(), 3, 10.0) == 1.0

    def test_negative_threshold(self):
        with pytest.raises(DomainError):
            worst_case_tail(EXP1, 2, -1.0)


def test_integrated_quantile_identity_behind_gap():
    # int_c^b H_a = Psi(a + (n-1)c, 1 - c) for decreasing densities
    for n, a, c in ((3, 0.1, 0.02), (5, 0.0, 0.1)):
        b = (1 - a) / n
        lhs = sp_integrate.quad(lambda t: float(depbounds._h(EXP1, n, a, t)), c, b)[0]
        assert lhs == pytest.approx(integrated_quantile(EXP1, a + (n - 1) * c, 1 - c), rel=1e-9)

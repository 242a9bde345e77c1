import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from outagebounds import oracle
from outagebounds.capacity import zero_outage_best
from outagebounds.csit import (
    csit_report,
    max_inverse_sum_expectation,
    min_expected_convex,
    min_inverse_sum_expectation,
    no_csit_gap,
    zero_outage_csit_best,
    zero_outage_csit_iid_exponential,
    zero_outage_csit_worst,
)
from outagebounds.errors import DomainError, UnsupportedDistributionError
from outagebounds.marginals import (
    ExponentialMarginal,
    QuantileTableMarginal,
    ShiftedMarginal,
    UniformMarginal,
)

EXP1 = ExponentialMarginal(1.0)
RHO5 = 10 ** 0.5
DB = {0: 1.0, 5: RHO5, 10: 10.0}


def _two_link_integral():
    return sp_integrate.quad(lambda t: 1.0 / -math.log(t * (1 - t)), 0.0, 0.5, limit=200, epsabs=1e-14)[0]


class TestMinExpectedConvex:
    @pytest.mark.parametrize("n", [2, 3, 5, 8])
    @pytest.mark.parametrize("m", [EXP1, ExponentialMarginal(2.5), UniformMarginal(), ShiftedMarginal(EXP1, 0.5)],
                             ids=repr)
    def test_identity(self, m, n):
        assert min_expected_convex(m, n, lambda x: x) == pytest.approx(n * m.mean, abs=1e-6)

    def test_identity_three_links(self):
        assert min_expected_convex(EXP1, 3, lambda x: x) == pytest.approx(3.0, abs=1e-6)

    def test_inverse_two_links(self):
        expected = 2 * _two_link_integral()
        assert min_expected_convex(EXP1, 2, lambda x: 1 / x) == pytest.approx(expected, rel=1e-9)

    def test_inverse_five_links(self):
        assert min_inverse_sum_expectation(EXP1, 5) == pytest.approx(0.200374288061841, rel=1e-8)

    def test_zero_branch(self):
        # uniform: c_n(0) = 0, the sum is a.s. n/2
        assert min_expected_convex(UniformMarginal(), 4, lambda x: x ** 2) == pytest.approx(4.0)

    def test_jensen(self):
        for n in (2, 3, 6):
            g = np.exp
            assert min_expected_convex(EXP1, n, lambda x: np.exp(-x)) >= math.exp(-n) - 1e-12
            assert min_expected_convex(UniformMarginal(), n, g) >= math.exp(n / 2) - 1e-9

    def test_single_link(self):
        assert min_expected_convex(EXP1, 1, lambda x: x) == pytest.approx(1.0, abs=1e-8)
        assert math.isinf(min_inverse_sum_expectation(EXP1, 1))

    def test_rejects_increasing(self):
        with pytest.raises(UnsupportedDistributionError):
            min_expected_convex(EXP1.negate(), 3, lambda x: x)

    def test_returns_float(self):
        assert type(min_inverse_sum_expectation(EXP1, 3)) is float


class TestBest:
    def test_two_links(self):
        expected = math.log2(1 + RHO5 / (2 * _two_link_integral()))
        assert zero_outage_csit_best(EXP1, 2, RHO5) == pytest.approx(expected, rel=1e-9)
        assert zero_outage_csit_best(EXP1, 2, RHO5) == pytest.approx(2.73920403142863, abs=1e-9)

    def test_five_links(self):
        assert zero_outage_csit_best(EXP1, 5, RHO5) == pytest.approx(4.06883016068966, abs=1e-8)

    @pytest.mark.parametrize("db", [0, 5, 10])
    @pytest.mark.parametrize("n", range(2, 9))
    def test_never_below_no_csit(self, n, db):
        assert zero_outage_csit_best(EXP1, n, DB[db]) >= zero_outage_best(EXP1, DB[db], n)

    def test_zero_branch_equal(self):
        for n in (2, 4, 7):
            m = UniformMarginal()
            assert zero_outage_csit_best(m, n, RHO5) == pytest.approx(zero_outage_best(m, RHO5, n), rel=1e-12)

    def test_gap_shrinks(self):
        gaps = [no_csit_gap(EXP1, n, RHO5) for n in range(2, 9)]
        assert gaps[-1] < gaps[0]
        assert all(b <= a for a, b in zip(gaps, gaps[1:]))
        assert all(g >= 0 for g in gaps)


class TestWorst:
    @pytest.mark.parametrize("n", [1, 2, 5, 10])
    def test_exponential_zero(self, n):
        assert zero_outage_csit_worst(EXP1, n, RHO5) == 0.0
        assert zero_outage_csit_worst(ExponentialMarginal(0.2), n, 100.0) == 0.0

    def test_shifted_finite(self):
        m = ShiftedMarginal(EXP1, 0.5)
        value = zero_outage_csit_worst(m, 3, RHO5)
        expected_inv = sp_integrate.quad(lambda u: 1 / (3 * (0.5 - math.log1p(-u))), 0, 1, limit=200)[0]
        assert value == pytest.approx(math.log2(1 + RHO5 / expected_inv), rel=1e-8)
        assert 0 < value

    def test_table_floor(self):
        delta = 0.4
        p = np.linspace(0, 1, 11)
        m = QuantileTableMarginal(p, delta + p ** 2)
        n = 3
        value = zero_outage_csit_worst(m, n, RHO5)
        assert value >= math.log2(1 + RHO5 * n * delta)
        mc = oracle.mc_expect_inv_sum(m, "comonotonic", 200_000, seed=2, n=n)
        assert math.log2(1 + RHO5 / mc.value) == pytest.approx(value, rel=1e-2)

    def test_heterogeneous_one_convergent_link(self):
        ms = [EXP1, UniformMarginal(1.0, 2.0)]
        assert 0 < zero_outage_csit_worst(ms, 2, 1.0) < math.log2(1 + 4.0)

    def test_length_check(self):
        with pytest.raises(DomainError):
            max_inverse_sum_expectation([EXP1], 2)


class TestIid:
    def test_five_links(self):
        value = zero_outage_csit_iid_exponential(5, RHO5, 1.0)
        assert value == pytest.approx(math.log2(1 + RHO5 * 4), abs=1e-12)
        assert value == pytest.approx(3.771, abs=1e-3)

    def test_one_bit(self):
        assert zero_outage_csit_iid_exponential(2, 1.0, 1.0) == 1.0

    def test_single_link_refused(self):
        with pytest.raises(DomainError):
            zero_outage_csit_iid_exponential(1, 1.0)

    def test_monte_carlo(self):
        est = oracle.mc_expect_inv_sum(EXP1, "iid", 1_000_000, seed=5, n=5)
        assert abs(est.value - 0.25) <= 3 * est.std_error

    @given(st.integers(2, 10), st.floats(0.2, 5.0))
    def test_ordering(self, n, lam):
        m = ExponentialMarginal(lam)
        assert min_inverse_sum_expectation(m, n) <= lam / (n - 1) <= max_inverse_sum_expectation(m, n)


class TestReport:
    def test_fields(self):
        rep = csit_report(EXP1, 5, RHO5)
        assert rep.worst <= rep.iid <= rep.best
        assert rep.min_inverse_sum_expectation == pytest.approx(0.200374288061841, rel=1e-8)

    def test_single_link(self):
        rep = csit_report(EXP1, 1, RHO5)
        assert rep.iid is None
        assert rep.best == 0.0 and rep.worst == 0.0

    def test_non_exponential(self):
        assert csit_report(UniformMarginal(), 3, RHO5).iid is None

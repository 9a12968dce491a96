"""Special functions: chi-squared/F tails and the case-0 Anderson-Darling test."""

import numpy as np
import pytest
from scipy import integrate

from crosscal.special import (
    ad_pvalue_asymptotic,
    ad_statistic_std_normal,
    ad_test_std_normal,
    chi2_sf,
    f_sf,
    norm_cdf,
    norm_ppf,
)


class TestChi2Sf:
    def test_zero_is_full_mass(self):
        assert chi2_sf(0.0, 3) == 1.0

    def test_reference_value_quadrature(self):
        # upper tail of the chi2_1 density integrated numerically
        oracle, _ = integrate.quad(lambda x: np.exp(-x / 2) / np.sqrt(2 * np.pi * x), 3.841, np.inf)
        assert chi2_sf(3.841, 1) == pytest.approx(oracle, abs=1e-10)
        assert chi2_sf(3.841, 1) == pytest.approx(0.05001368376, abs=1e-9)

    def test_large_df_normal_approximation(self):
        # median of chi2_df approaches df; the upper tail at df tends to 1/2
        assert chi2_sf(200, 200) == pytest.approx(0.5, abs=0.02)

    def test_monotone_decreasing(self):
        x = np.linspace(0, 30, 200)
        vals = chi2_sf(x, 4)
        assert np.all(np.diff(vals) < 0)

    def test_negative_raises(self):
        with pytest.raises(ValueError):
            chi2_sf(-0.5, 2)


class TestFSf:
    def test_zero_is_full_mass(self):
        assert f_sf(0.0, 3, 7) == 1.0

    def test_symmetry_at_one(self):
        # X and 1/X share the same law when the degrees of freedom coincide
        for d in (1, 4, 11):
            assert f_sf(1.0, d, d) == pytest.approx(0.5, abs=1e-12)

    def test_student_t_squared_relation(self):
        # F(1, nu) is the square of a Student t(nu): x = t_{10, 0.975}^2
        t975 = 2.228138851986273
        assert f_sf(t975**2, 1, 10) == pytest.approx(0.05, abs=1e-12)

    def test_negative_raises(self):
        with pytest.raises(ValueError):
            f_sf(-1.0, 2, 2)


class TestAndersonDarling:
    def test_asymptotic_reference_points(self):
        # classical case-0 critical values
        for crit, alpha in [(1.933, 0.10), (2.492, 0.05), (3.070, 0.025), (3.857, 0.01)]:
            assert ad_pvalue_asymptotic(crit) == pytest.approx(alpha, abs=1.5e-3)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(64)
        a1 = ad_statistic_std_normal(x)
        a2 = ad_statistic_std_normal(rng.permutation(x))
        assert a1 == a2

    def test_gross_mean_shift_detected(self):
        rng = np.random.default_rng(6)
        _, p = ad_test_std_normal(rng.standard_normal(10_000) + 1.0)
        assert p < 0.001

    def test_level_on_null_samples(self):
        # rejection rate at 5% over iid standard normal samples
        rng = np.random.default_rng(7)
        reps = 2000
        rejections = 0
        for _ in range(reps):
            _, p = ad_test_std_normal(rng.standard_normal(2000))
            rejections += p <= 0.05
        assert 0.03 <= rejections / reps <= 0.07

    def test_too_short_raises(self):
        with pytest.raises(ValueError):
            ad_statistic_std_normal(np.zeros(5))

    def test_non_finite_raises(self):
        x = np.zeros(20)
        x[3] = np.inf
        with pytest.raises(ValueError):
            ad_statistic_std_normal(x)


class TestNormalHelpers:
    def test_quantile_reference(self):
        assert norm_ppf(0.975) == pytest.approx(1.959963984540054, abs=1e-12)

    def test_roundtrip(self):
        p = np.linspace(0.01, 0.99, 99)
        assert np.max(np.abs(norm_cdf(norm_ppf(p)) - p)) < 1e-12

"""Linear regression approach test: design pruning, F statistic, combination."""

import numpy as np
import pytest

from crosscal.dataset import PredictionDataset
from crosscal.lra import build_design, lra_test
from crosscal.scenarios import ScenarioSpec, simulate
from crosscal.schemas import validate_report

@pytest.fixture(scope="module")
def gr_ds():
    return simulate(ScenarioSpec("gr2013", 80, seed=2))


class TestBuildDesign:
    def test_empty_set_is_intercept_only(self, gr_ds):
        design, labels, dropped = build_design(gr_ds, [])
        assert design.shape == (80, 1)
        assert np.all(design == 1.0)
        assert not labels and not dropped

    def test_constant_parameters_dropped(self, gr_ds):
        # the mixture family carries (mu, sigma, tau); the perfect forecaster
        # holds sigma and tau fixed, so only its mean survives
        design, labels, dropped = build_design(gr_ds, [1])
        assert labels == ["perfect.mu"]
        assert {d.label for d in dropped} == {"perfect.sigma", "perfect.tau"}
        assert all(d.reason == "constant" for d in dropped)

    def test_unfocused_keeps_mean_and_shift(self, gr_ds):
        design, labels, dropped = build_design(gr_ds, [3])
        assert labels == ["unfocused.mu", "unfocused.tau"]

    def test_conditioning_reduces_to_known_cases(self, gr_ds):
        # any set containing the unfocused forecaster tests against (mu, tau),
        # any other nonempty set against the perfect forecaster's mean alone
        with_3 = build_design(gr_ds, [1, 3, 4])[0]
        only_3 = build_design(gr_ds, [3])[0]
        squares = np.linalg.qr(with_3, mode="r"), np.linalg.qr(only_3, mode="r")
        assert with_3.shape[1] == only_3.shape[1] == 3
        # identical column spans: projections of one onto the other are exact
        proj, *_ = np.linalg.lstsq(with_3, only_3, rcond=None)
        assert np.max(np.abs(with_3 @ proj - only_3)) < 1e-10

    def test_sign_reversed_collinear_with_perfect(self, gr_ds):
        design, labels, dropped = build_design(gr_ds, [1, 4])
        assert labels == ["perfect.mu"]
        reasons = {d.label: d.reason for d in dropped}
        assert reasons["sign-reversed.mu"] == "collinear"

    def test_duplicate_forecasters_dropped(self, gr_ds):
        design, labels, dropped = build_design(gr_ds, [3, 3])
        assert labels == ["unfocused.mu", "unfocused.tau"]
        assert sum(d.reason == "collinear" for d in dropped) == 2


class TestLraTest:
    def test_report_contents(self, gr_ds):
        report = lra_test(gr_ds, 1, [1])
        assert 0 <= report.p_f <= 1
        assert 0 <= report.p_normal <= 1
        assert report.p_adjusted <= 1.0
        assert report.df_model == 2
        assert report.df_resid == 78
        validate_report(report.to_dict())

    def test_adjusted_is_capped_holm(self, gr_ds):
        report = lra_test(gr_ds, 1, [])
        assert report.p_adjusted == min(1.0, 2.0 * min(report.p_f, report.p_normal))

    def test_row_permutation_invariance(self):
        rng = np.random.default_rng(4)
        n = 60
        mu = rng.standard_normal(n)
        y = mu + rng.standard_normal(n)
        params = np.column_stack([mu, np.ones(n)])
        ds = PredictionDataset(families=("normal",), params=(params,), y=y)
        rep = lra_test(ds, 1, [1])
        perm = rng.permutation(n)
        ds2 = PredictionDataset(families=("normal",), params=(params[perm],), y=y[perm])
        rep2 = lra_test(ds2, 1, [1])
        assert rep.f_statistic == pytest.approx(rep2.f_statistic, rel=1e-10)

    def test_pythagoras_identity(self):
        rng = np.random.default_rng(8)
        n = 50
        mu = rng.standard_normal(n)
        ds = PredictionDataset(
            families=("normal",),
            params=(np.column_stack([mu, np.ones(n)]),),
            y=mu + rng.standard_normal(n),
        )
        from crosscal.lra import _PIT_CLAMP
        from crosscal.dataset import pit_series
        from crosscal.special import norm_ppf

        design, _, _ = build_design(ds, [1])
        yvec = norm_ppf(np.clip(pit_series(ds, 1).values, _PIT_CLAMP, 1 - _PIT_CLAMP))
        beta, *_ = np.linalg.lstsq(design, yvec, rcond=None)
        fitted = design @ beta
        resid = yvec - fitted
        lhs = yvec @ yvec
        rhs = fitted @ fitted + resid @ resid
        assert abs(lhs - rhs) <= 1e-8 * abs(lhs)

    def test_pf_uniform_under_null(self):
        # fixed design, standard normal responses: the F p-value is uniform
        rng = np.random.default_rng(12)
        n, reps = 50, 10_000
        design_col = rng.standard_normal(n)
        params = np.column_stack([design_col, np.ones(n)])
        pvals = np.empty(reps)
        for r in range(reps):
            y = design_col + rng.standard_normal(n)
            ds = PredictionDataset(families=("normal",), params=(params,), y=y)
            pvals[r] = lra_test(ds, 1, [1]).p_f
        grid = np.sort(pvals)
        ks = np.max(np.abs(grid - np.arange(1, reps + 1) / reps))
        assert ks < 0.02

    def test_pit_clamping_counted(self):
        # a forecaster with a jump at the outcome can produce PIT exactly 0
        n = 20
        params = np.full((n, 1), 0.5)
        y = np.zeros(n)
        ds = PredictionDataset(families=("bernoulli",), params=(params,), y=y, v=np.zeros(n))
        report = lra_test(ds, 1, [])
        assert report.clamped_pits == n

    def test_too_few_rows(self):
        ds = PredictionDataset(
            families=("normal",), params=(np.array([[0.0, 1.0], [1.0, 1.0]]),), y=[0.0, 1.0]
        )
        with pytest.raises(ValueError, match="rows"):
            lra_test(ds, 1, [1])

"""Acceptance suite: benchmark tables and global properties.

Every test prints one line per checked quantity in the form

    ACCEPTANCE <name>: value=... target=... -> PASS

Monte Carlo scales (replications, bootstrap sizes) follow the benchmark
tables; the whole module is CPU-bound and takes on the order of an hour on
one core.  Run it alone with `pytest tests/test_acceptance.py -s`.
"""

import json

import numpy as np
import pytest

from crosscal.cep import CepConfig, cep_power_study, westfall_young_adjust
from crosscal.cli import main
from crosscal.csvio import dump_csv
from crosscal.dataset import PredictionDataset
from crosscal.distributions import Distribution, get_family
from crosscal.firth import firth_fit
from crosscal.mct import TABLE_GRIDS
from crosscal.scenarios import PowerStudySpec, ScenarioSpec, TestSpec, power_study
from crosscal.special import chi2_sf, norm_cdf
from crosscal.sra import NORMAL_CRPS_VAR, crps_generic, crps_normal, dss

pytestmark = pytest.mark.acceptance


def check(name: str, value: float, lo: float, hi: float) -> None:
    ok = lo <= value <= hi
    print(f"ACCEPTANCE {name}: value={value:.4f} band=[{lo:.4f}, {hi:.4f}] -> {'PASS' if ok else 'FAIL'}")
    assert ok, f"{name}: {value:.4f} outside [{lo:.4f}, {hi:.4f}]"


def run_power(scenario, n, test, r, seed, alpha=0.05):
    spec = PowerStudySpec(
        scenario=ScenarioSpec(scenario, n), test=test, replications=r, alpha=alpha, seed=seed
    )
    res = power_study(spec)
    assert not res.errors, f"replicates failed: {res.errors[:3]}"
    return res.rate


class TestCriterion1FsPassRates:
    def test_fs_table_required_rows(self):
        rate1 = run_power("binary-beta", 10_000, TestSpec("fs", tested=1), 1000, seed=101)
        check("fs pass rate T=1e4", rate1, 0.112 - 0.03, 0.112 + 0.03)
        rate2 = run_power("binary-beta", 50_000, TestSpec("fs", tested=1), 1000, seed=102)
        check("fs pass rate T=5e4", rate2, 0.254 - 0.04, 0.254 + 0.04)

    @pytest.mark.slow
    def test_fs_table_optional_row(self):
        rate = run_power("binary-beta", 100_000, TestSpec("fs", tested=1), 1000, seed=103)
        check("fs pass rate T=1e5 (optional)", rate, 0.333 - 0.05, 0.333 + 0.05)


_TABLE3_SETS = [(1,), (2,), (3,), (4,), (1, 3), (1, 4), (3, 4), (1, 3, 4)]


class TestCriterion2CepGr2013:
    R, L, N = 1000, 200, 50

    @pytest.mark.parametrize("wrt", _TABLE3_SETS, ids=lambda s: "J=" + "".join(map(str, s)))
    def test_calibrated_row_levels(self, wrt):
        test = TestSpec("cep", 1, wrt, {"bootstrap": self.L})
        rate = run_power("gr2013", self.N, test, self.R, seed=(210, *wrt))
        check(f"cep level F1 wrt {wrt}", rate, 0.03, 0.07)

    @pytest.mark.parametrize("wrt", _TABLE3_SETS, ids=lambda s: "J=" + "".join(map(str, s)))
    def test_sign_reversed_row_full_power(self, wrt):
        test = TestSpec("cep", 4, wrt, {"bootstrap": self.L})
        rate = run_power("gr2013", self.N, test, self.R, seed=(220, *wrt))
        check(f"cep power F4 wrt {wrt}", rate, 0.99, 1.0)

    def test_climatological_detected(self):
        test = TestSpec("cep", 2, (1,), {"bootstrap": self.L})
        rate = run_power("gr2013", self.N, test, self.R, seed=230)
        check("cep power F2 wrt (1,)", rate, 0.95, 1.0)

    def test_unfocused_against_informed_set(self):
        test = TestSpec("cep", 3, (1, 3), {"bootstrap": self.L})
        rate = run_power("gr2013", self.N, test, self.R, seed=240)
        check("cep power F3 wrt (1,3)", rate, 0.635 - 0.05, 0.635 + 0.05)


class TestCriterion3CepTdf:
    R, L, N = 1000, 200, 200

    def test_prior_t_detected_against_informed(self):
        test = TestSpec("cep", 2, (1,), {"bootstrap": self.L})
        rate = run_power("tdf", self.N, test, self.R, seed=310)
        check("cep tdf power F2 wrt (1,)", rate, 0.533 - 0.05, 0.533 + 0.05)

    @pytest.mark.parametrize("wrt", [(1,), (2,), (1, 2)], ids=lambda s: "J=" + "".join(map(str, s)))
    def test_informed_row_levels(self, wrt):
        test = TestSpec("cep", 1, wrt, {"bootstrap": self.L})
        rate = run_power("tdf", self.N, test, self.R, seed=(320, *wrt))
        check(f"cep tdf level F1 wrt {wrt}", rate, 0.03, 0.07)


class TestCriterion4LraGr2013:
    R = 2000

    def test_unfocused_self_test_power(self):
        rate = run_power("gr2013", 50, TestSpec("lra", 3, (3,)), self.R, seed=410)
        check("lra power F3 wrt (3,) N=50", rate, 0.734 - 0.04, 0.734 + 0.04)

    def test_climatological_power_small_sample(self):
        rate = run_power("gr2013", 20, TestSpec("lra", 2, (1,)), self.R, seed=420)
        check("lra power F2 wrt (1,) N=20", rate, 0.884 - 0.03, 0.884 + 0.03)

    @pytest.mark.parametrize("n,wrt", [(20, (1,)), (20, (2,)), (20, (3,)), (20, (4,)),
                                       (50, (1,)), (50, (2,)), (50, (3,)), (50, (4,))],
                             ids=lambda v: str(v))
    def test_calibrated_rows_conservative(self, n, wrt):
        rate = run_power("gr2013", n, TestSpec("lra", 1, wrt), self.R, seed=(430, n, *wrt))
        check(f"lra level F1 wrt {wrt} N={n}", rate, 0.025 - 0.012, 0.025 + 0.012)

    @pytest.mark.parametrize("wrt", [(1,), (2,), (4,)], ids=lambda s: "J=" + "".join(map(str, s)))
    def test_unfocused_calibrated_against_others(self, wrt):
        rate = run_power("gr2013", 50, TestSpec("lra", 3, wrt), self.R, seed=(440, *wrt))
        check(f"lra level F3 wrt {wrt} N=50", rate, 0.025 - 0.012, 0.025 + 0.012)


class TestCriterion5LraFTdf:
    R = 2000

    def test_prior_t_f_test_power(self):
        test = TestSpec("lra", 2, (1,), {"statistic": "f"})
        rate = run_power("tdf", 1000, test, self.R, seed=510)
        check("lra-F tdf power F2 wrt (1,) N=1000", rate, 0.139 - 0.03, 0.139 + 0.03)

    @pytest.mark.parametrize("wrt", [(1,), (2,), (1, 2)], ids=lambda s: "J=" + "".join(map(str, s)))
    def test_informed_levels(self, wrt):
        test = TestSpec("lra", 1, wrt, {"statistic": "f"})
        rate = run_power("tdf", 1000, test, self.R, seed=(520, *wrt))
        check(f"lra-F tdf level F1 wrt {wrt}", rate, 0.035, 0.065)


class TestCriterion6SraCrps:
    R = 2000

    def test_perturbed_scale_detected(self):
        test = TestSpec("sra", 2, (1, 2), {"score": "crps"})
        rate = run_power("scale-perturb", 200, test, self.R, seed=610)
        check("sra-crps power F2 wrt (1,2) N=200", rate, 0.852 - 0.04, 0.852 + 0.04)

    def test_ideal_scale_level(self):
        test = TestSpec("sra", 1, (1,), {"score": "crps"})
        rate = run_power("scale-perturb", 500, test, self.R, seed=620)
        check("sra-crps level F1 wrt (1,) N=500", rate, 0.050 - 0.015, 0.050 + 0.015)


class TestCriterion7SraDss:
    R = 2000

    def test_prior_t_detected(self):
        test = TestSpec("sra", 2, (1, 2), {"score": "dss"})
        rate = run_power("tdf", 200, test, self.R, seed=710)
        check("sra-dss tdf power F2 wrt (1,2) N=200", rate, 0.963 - 0.02, 0.963 + 0.02)

    def test_prior_t_self_test_anticonservative(self):
        test = TestSpec("sra", 2, (2,), {"score": "dss"})
        rate = run_power("tdf", 500, test, self.R, seed=720)
        check("sra-dss tdf level F2 wrt (2,) N=500", rate, 0.072 - 0.02, 0.072 + 0.02)


class TestCriterion8Mct:
    R, N = 2000, 500

    def test_unfocused_self_power_m4(self):
        test = TestSpec("mct", 3, (3,), {"grid": TABLE_GRIDS["m4"]})
        rate = run_power("gr2013", self.N, test, self.R, seed=810)
        check("mct power F3 wrt F3 m=4", rate, 0.512 - 0.05, 0.512 + 0.05)

    @pytest.mark.parametrize("j", [1, 2], ids=["wrtF1", "wrtF2"])
    def test_sign_reversed_rows_full_power(self, j):
        test = TestSpec("mct", 4, (j,), {"grid": TABLE_GRIDS["m4"]})
        rate = run_power("gr2013", self.N, test, self.R, seed=820 + j)
        check(f"mct power F4 wrt F{j} m=4", rate, 0.99, 1.0)

    @pytest.mark.parametrize(
        "i,j,grid",
        [(1, 1, "m4"), (1, 1, "m9"), (4, 4, "m4"), (3, 4, "m4")],
        ids=["F1wrtF1-m4", "F1wrtF1-m9", "F4wrtF4-m4", "F3wrtF4-m4"],
    )
    def test_calibrated_rows_near_nominal(self, i, j, grid):
        test = TestSpec("mct", i, (j,), {"grid": TABLE_GRIDS[grid]})
        rate = run_power("gr2013", self.N, test, self.R, seed=(830, i, j, len(grid)))
        check(f"mct level F{i} wrt F{j} {grid}", rate, 0.04, 0.08)


class TestCriterion9Properties:
    def test_crps_closed_form_vs_quadrature(self):
        rng = np.random.default_rng(910)
        worst = 0.0
        for _ in range(1000):
            mu, sigma, y = rng.normal(), rng.uniform(0.2, 4.0), rng.normal(scale=3.0)
            closed = crps_normal(mu, sigma, y)
            quad = crps_generic(Distribution.make("normal", mu, sigma), y)
            worst = max(worst, abs(closed - quad))
        check("crps closed vs quadrature (max abs diff)", worst, 0.0, 1e-7)

    def test_dss_moment_identities(self):
        rng = np.random.default_rng(911)
        n = 1_000_000
        sigma = rng.uniform(1.0, 2.0, n)
        y = sigma * rng.standard_normal(n)
        scores = dss(np.zeros(n), sigma**2, y)
        delta = abs(scores.mean() - (0.5 + np.mean(np.log(sigma))))
        check("dss mean identity (|delta| / 3 SE)", delta / (3 * scores.std() / np.sqrt(n)), 0.0, 1.0)
        centered_var = np.var(scores - np.log(sigma))
        check("dss variance identity (ratio)", centered_var / 0.5, 0.95, 1.05)

    def test_crps_moment_identities(self):
        rng = np.random.default_rng(912)
        n = 1_000_000
        sigma = 1.3
        scores = crps_normal(0.0, sigma, sigma * rng.standard_normal(n))
        delta = abs(scores.mean() - sigma / np.sqrt(np.pi))
        check("crps mean identity (|delta| / 3 SE)", delta / (3 * scores.std() / np.sqrt(n)), 0.0, 1.0)
        check("crps variance identity (ratio)", np.var(scores) / (NORMAL_CRPS_VAR * sigma**2), 0.95, 1.05)

    def test_shifted_mixture_quantile_identity(self):
        def psi_p(x):
            return 0.5 * (norm_cdf(x) + norm_cdf(x - 1.0))

        def psi_m(x):
            return 0.5 * (norm_cdf(x) + norm_cdf(x + 1.0))

        def inverse(fn, y):
            lo, hi = -12.0, 12.0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                lo, hi = (mid, hi) if fn(mid) < y else (lo, mid)
            return 0.5 * (lo + hi)

        ys = np.linspace(0.01, 0.99, 99)
        vals = np.array([0.5 * norm_cdf(inverse(psi_p, y)) + 0.5 * norm_cdf(inverse(psi_m, y)) for y in ys])
        check("half-shift mixture identity (max abs dev)", float(np.max(np.abs(vals - ys))), 0.0, 1e-8)

    def test_binary_pit_density_integral_and_fit(self):
        from crosscal.binary_fs import binary_pit_density

        x1, q = 0.35, 0.35**2
        grid = np.linspace(0, 1, 400_001)
        integral = float(np.trapezoid(binary_pit_density(grid, x1, q), grid))
        check("binary pit density integral", integral, 1 - 1e-3, 1 + 1e-3)
        rng = np.random.default_rng(913)
        n, cells = 100_000, 10
        y = rng.random(n) < q
        v = rng.random(n)
        z = np.where(y, (1 - x1) + x1 * v, (1 - x1) * v)
        counts = np.bincount(np.minimum((z * cells).astype(int), cells - 1), minlength=cells)
        edges = np.linspace(0, 1, cells + 1)
        low = np.minimum(np.maximum(1 - x1 - edges[:-1], 0), 1.0 / cells)
        probs = low * (1 - q) / (1 - x1) + (1.0 / cells - low) * q / x1
        stat = float(np.sum((counts - n * probs) ** 2 / (n * probs)))
        pval = float(chi2_sf(stat, cells - 1))
        check("binary pit histogram GOF p-value", pval, 0.001, 1.0)

    def test_firth_finite_under_separation(self):
        rng = np.random.default_rng(914)
        worst = 0.0
        for _ in range(50):
            n = int(rng.integers(10, 40))
            x = np.sort(rng.standard_normal(n))
            cut = int(rng.integers(2, n - 2))
            b = np.zeros(n)
            b[cut:] = 1.0
            fit = firth_fit(np.column_stack([np.ones(n), x]), b)
            worst = max(worst, float(np.max(np.abs(fit.beta))))
            assert np.all(np.isfinite(fit.beta))
        check("firth max |beta| over 50 separated designs", worst, 0.0, 100.0)

    def test_westfall_young_fwer_under_global_null(self):
        def make_ds(rng):
            n = 200
            mu = rng.standard_normal(n)
            return PredictionDataset(
                families=("normal",),
                params=(np.column_stack([mu, np.ones(n)]),),
                y=mu + rng.standard_normal(n),
            )

        config = CepConfig(bootstrap=200)
        rejections, completed, errors = cep_power_study(make_ds, 1, [1], config, 1000, seed=915)
        assert completed == 1000 and not errors
        check("westfall-young FWER", rejections / completed, 0.03, 0.07)

    def test_adjusted_pvalues_monotone_transform_invariant(self):
        rng = np.random.default_rng(916)
        raw = rng.random(20)
        pstar = rng.random((500, 20))
        base = westfall_young_adjust(raw, pstar)
        for transform in (np.square, np.sqrt, lambda p: 1 - np.exp(-3 * p)):
            other = westfall_young_adjust(transform(raw), transform(pstar))
            assert np.array_equal(base, other)
        print("ACCEPTANCE westfall-young monotone-transform invariance: bit-exact -> PASS")


class TestCriterion10Pipeline:
    def _two_piece_panel(self, path):
        rng = np.random.default_rng(1001)
        n = 60
        mu = 0.5 * rng.standard_normal(n)
        s1 = 0.8 + 0.4 * rng.random(n)
        s2 = 1.2 + 0.6 * rng.random(n)
        params = np.column_stack([mu, s1, s2])
        fam = get_family("two-piece-normal")
        y = fam.sample(params, np.random.default_rng(1002))
        ds = PredictionDataset(families=("two-piece-normal",), params=(params,), y=y)
        dump_csv(ds, path)

    def test_ingest_to_tests_to_csv_byte_identical(self, tmp_path):
        panel = tmp_path / "tp.csv"
        self._two_piece_panel(panel)
        outputs = {}
        for attempt in ("a", "b"):
            cep_json = tmp_path / f"cep_{attempt}.json"
            cep_csv = tmp_path / f"cep_{attempt}.csv"
            lra_json = tmp_path / f"lra_{attempt}.json"
            lra_csv = tmp_path / f"lra_{attempt}.csv"
            assert main(["cep", str(panel), "--tested", "1", "--wrt", "1",
                         "--grid", "simulation", "--bootstrap", "100", "--seed", "77",
                         "--json-out", str(cep_json), "--csv-out", str(cep_csv)]) == 0
            assert main(["lra", str(panel), "--tested", "1", "--wrt", "1",
                         "--json-out", str(lra_json), "--csv-out", str(lra_csv)]) == 0
            outputs[attempt] = tuple(p.read_bytes() for p in (cep_json, cep_csv, lra_json, lra_csv))
        assert outputs["a"] == outputs["b"]
        report = json.loads(outputs["a"][0])
        assert report["test"] == "cep" and len(report["pointwise"]) == 20
        print("ACCEPTANCE pipeline ingest->cep/lra->csv byte-identical reruns -> PASS")

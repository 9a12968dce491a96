"""Bundled simulation scenarios and the Monte Carlo power harness.

Four generative models cover the standard benchmark settings:

* ``gr2013``: a latent location mu ~ N(0,1) with outcome Y ~ N(mu, 1) and a
  random shift tau = +-1; four forecasters of varying skill expressed in the
  equal-weight normal-mixture family (mu, sigma, tau): the perfect (mu, 1, 0),
  the climatological (0, sqrt 2, 0), the unfocused (mu, 1, tau) and the
  sign-reversed (-mu, 1, 0).
* ``tdf``: nu ~ U(5, 20), variance nu / chi2(nu) and Y ~ N(0, sigma); the
  informed forecaster N(0, sigma) against the prior-predictive Student t(nu).
* ``scale-perturb``: sigma_n ~ U(0, 1), noise eps_n ~ N(0, 1/16); both
  forecasters normal with scales 1 + sigma_n and 1 + sigma_n + eps_n, outcome
  matching the first.
* ``binary-beta``: success probability B ~ Beta(3, 5), an independent
  competitor signal C ~ Beta(2, 1.5), outcome Bernoulli(B); interval
  forecasters at resolution 5 naming the subintervals containing B and C
  respectively (the first is cross-calibrated, the second is not).

Rows are independent across time in all scenarios.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .binary_fs import IntervalForecastSeries, fs_pass, interval_index
from .cep import CepConfig, cep_power_study
from .dataset import PredictionDataset
from .lra import lra_test
from .mct import MctDegenerateError, mct_test
from .sra import sra_test

__all__ = [
    "ScenarioSpec",
    "TestSpec",
    "PowerStudySpec",
    "PowerResult",
    "SCENARIO_NAMES",
    "simulate",
    "ar1_rolling_forecasts",
    "ar1_dataset",
    "power_study",
]

logger = logging.getLogger(__name__)

SCENARIO_NAMES = ("gr2013", "tdf", "scale-perturb", "binary-beta")


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    n_rows: int
    seed: int | tuple | None = None

    def __post_init__(self):
        if self.name not in SCENARIO_NAMES:
            raise ValueError(f"unknown scenario {self.name!r}; known: {SCENARIO_NAMES}")
        if self.n_rows < 1:
            raise ValueError("n_rows must be at least 1")


def _simulate_gr2013(n: int, rng) -> PredictionDataset:
    mu = rng.standard_normal(n)
    tau = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    y = mu + rng.standard_normal(n)
    ones, zeros = np.ones(n), np.zeros(n)
    params = (
        np.column_stack([mu, ones, zeros]),
        np.column_stack([zeros, np.sqrt(2.0) * ones, zeros]),
        np.column_stack([mu, ones, tau]),
        np.column_stack([-mu, ones, zeros]),
    )
    return PredictionDataset(
        families=("normal-mixture",) * 4,
        params=params,
        y=y,
        labels=("perfect", "climatological", "unfocused", "sign-reversed"),
    )


def _simulate_tdf(n: int, rng) -> PredictionDataset:
    nu = rng.uniform(5.0, 20.0, n)
    sigma2 = nu / rng.chisquare(nu)
    sigma = np.sqrt(sigma2)
    y = sigma * rng.standard_normal(n)
    return PredictionDataset(
        families=("normal", "student-t"),
        params=(np.column_stack([np.zeros(n), sigma]), nu[:, None]),
        y=y,
        labels=("informed", "prior-t"),
    )


def _simulate_scale_perturb(n: int, rng) -> PredictionDataset:
    s1 = np.empty(n)
    s2 = np.empty(n)
    pending = np.ones(n, dtype=bool)
    redraws = 0
    while pending.any():
        k = int(pending.sum())
        sig = rng.uniform(0.0, 1.0, k)
        eps = rng.normal(0.0, 0.25, k)
        ok = 1.0 + sig + eps > 0.01
        idx = np.nonzero(pending)[0][ok]
        s1[idx] = 1.0 + sig[ok]
        s2[idx] = 1.0 + sig[ok] + eps[ok]
        pending[idx] = False
        redraws += k - int(ok.sum())
    if redraws:
        logger.info("scale-perturb: redrew %d rows with non-positive perturbed scale", redraws)
    y = s1 * rng.standard_normal(n)
    zeros = np.zeros(n)
    return PredictionDataset(
        families=("normal", "normal"),
        params=(np.column_stack([zeros, s1]), np.column_stack([zeros, s2])),
        y=y,
        labels=("ideal-scale", "perturbed-scale"),
    )


def _simulate_binary_beta(n: int, rng) -> IntervalForecastSeries:
    # Success probability B with an informed interval forecaster and an
    # independent coarse competitor C.  Calibrated so that the pass rates of
    # the interval check reproduce the published benchmark at T = 1e4..1e5.
    b = rng.beta(3.0, 5.0, n)
    c = rng.beta(2.0, 1.5, n)
    outcomes = (rng.random(n) < b).astype(int)
    return IntervalForecastSeries(
        n=5,
        intervals1=interval_index(b, 5),
        intervals2=interval_index(c, 5),
        outcomes=outcomes,
    )


_BUILDERS = {
    "gr2013": _simulate_gr2013,
    "tdf": _simulate_tdf,
    "scale-perturb": _simulate_scale_perturb,
    "binary-beta": _simulate_binary_beta,
}


def simulate(spec: ScenarioSpec, rng=None):
    """Draw one dataset from the named scenario.

    Deterministic given (spec, seed): identical spec and seed produce byte
    identical datasets.  ``binary-beta`` yields an
    :class:`~crosscal.binary_fs.IntervalForecastSeries`; the other scenarios
    yield a :class:`~crosscal.dataset.PredictionDataset`.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    return _BUILDERS[spec.name](spec.n_rows, rng)


def ar1_rolling_forecasts(series, window: int = 6):
    """Gaussian one-step forecasts from a rolling first-order autoregression.

    At each origin t (0-based) the most recent ``window`` transition pairs
    (y_{s-1}, y_s), s = t-window+1..t, are fitted by OLS with intercept; the
    forecast for y_{t+1} is the fitted mean at y_t with the residual standard
    deviation on window - 2 degrees of freedom.  Origins with insufficient
    history produce no forecast.

    Returns
    -------
    (origins, means, sds)
        Origins are the time indices t (the forecast targets y_{t+1});
        the first origin is ``window``.

    Raises
    ------
    ValueError
        If the series is too short, or some window has zero residual variance
        (the message names the origin).
    """
    y = np.asarray(series, dtype=float)
    if y.ndim != 1 or y.size < window + 2:
        raise ValueError(f"series must have more than window + 1 = {window + 1} points")
    origins = np.arange(window, y.size)
    means = np.empty(origins.size)
    sds = np.empty(origins.size)
    for k, t in enumerate(origins):
        past = y[t - window : t]  # predictors y_{s-1}
        target = y[t - window + 1 : t + 1]  # responses y_s
        design = np.column_stack([np.ones(window), past])
        coef, *_ = np.linalg.lstsq(design, target, rcond=None)
        resid = target - design @ coef
        rss = float(resid @ resid)
        scale = np.sqrt(max(rss, 0.0) / (window - 2))
        if scale <= 1e-10 * max(1.0, float(np.max(np.abs(target)))):
            raise ValueError(f"zero residual variance in the window ending at origin {t}")
        means[k] = coef[0] + coef[1] * y[t]
        sds[k] = scale
    return origins, means, sds


def ar1_dataset(series, window: int = 6) -> PredictionDataset:
    """Forecast-observation panel of the rolling AR(1) against realized values.

    Drops the final origin (its outcome is not yet observed).
    """
    y = np.asarray(series, dtype=float)
    origins, means, sds = ar1_rolling_forecasts(y, window)
    usable = origins < y.size - 1
    origins, means, sds = origins[usable], means[usable], sds[usable]
    return PredictionDataset(
        families=("normal",),
        params=(np.column_stack([means, sds]),),
        y=y[origins + 1],
        labels=("ar1",),
    )


@dataclass(frozen=True)
class TestSpec:
    """Which test to run inside a power study.

    ``kind`` is one of cep, lra, sra, mct, fs.  ``conditioning`` holds the
    J-set (cep, lra), the score regressors (sra), the reference forecaster
    (mct, single element), and is unused for fs.  ``options`` passes
    test-specific settings: cep {grid, bootstrap}, lra {statistic: adjusted|f},
    sra {score: crps|dss}, mct {grid}.
    """

    __test__ = False  # not a pytest class despite the name

    kind: str
    tested: int = 1
    conditioning: tuple[int, ...] = ()
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("cep", "lra", "sra", "mct", "fs"):
            raise ValueError(f"unknown test kind {self.kind!r}")


@dataclass(frozen=True)
class PowerStudySpec:
    scenario: ScenarioSpec
    test: TestSpec
    replications: int
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass(frozen=True)
class PowerResult:
    rate: float
    stderr: float
    positives: int
    completed: int
    errors: tuple[tuple[int, str], ...]

    def __str__(self):
        extra = f", {len(self.errors)} failed replicates" if self.errors else ""
        return f"{self.rate:.3f} +- {self.stderr:.3f} ({self.positives}/{self.completed}{extra})"


def _replicate_rng(seed, r):
    key = (seed,) if isinstance(seed, int) else tuple(seed)
    return np.random.default_rng(key + (0, r))


def power_study(spec: PowerStudySpec) -> PowerResult:
    """Monte Carlo rate of positive test outcomes over fresh scenario draws.

    A positive outcome is a rejection at level alpha for the statistical
    tests, and a pass of the interval cross-calibration check for ``fs``.
    Replicates failing with a statistical degeneracy are counted and reported,
    never silently skipped.  Deterministic given the seed.
    """
    test = spec.test
    n = spec.scenario.n_rows
    make = _BUILDERS[spec.scenario.name]

    if test.kind == "cep":
        config = CepConfig(
            grid=test.options.get("grid", CepConfig().grid),
            bootstrap=test.options.get("bootstrap", 500),
            alpha=spec.alpha,
        )
        positives, completed, errors = cep_power_study(
            lambda rng: make(n, rng),
            test.tested,
            list(test.conditioning),
            config,
            spec.replications,
            spec.seed,
        )
    else:
        positives, completed = 0, 0
        errors: list[tuple[int, str]] = []
        for r in range(spec.replications):
            data = make(n, _replicate_rng(spec.seed, r))
            try:
                positives += _run_single(test, data, spec.alpha)
                completed += 1
            except (ValueError, np.linalg.LinAlgError) as exc:
                errors.append((r, str(exc)))

    if completed == 0:
        return PowerResult(float("nan"), float("nan"), 0, 0, tuple(errors))
    rate = positives / completed
    stderr = float(np.sqrt(rate * (1.0 - rate) / completed))
    return PowerResult(rate, stderr, positives, completed, tuple(errors))


def _run_single(test: TestSpec, data, alpha: float) -> bool:
    if test.kind == "fs":
        return fs_pass(data, test.tested)[0]
    if test.kind == "lra":
        report = lra_test(data, test.tested, list(test.conditioning))
        stat = test.options.get("statistic", "adjusted")
        pvalue = report.p_f if stat == "f" else report.p_adjusted
        return pvalue <= alpha
    if test.kind == "sra":
        report = sra_test(data, test.tested, list(test.conditioning), score=test.options.get("score", "crps"))
        return report.pvalue <= alpha
    if test.kind == "mct":
        (j,) = test.conditioning
        try:
            report = mct_test(data, test.tested, j, test.options["grid"])
        except MctDegenerateError as exc:
            raise ValueError(str(exc)) from exc
        return report.pvalue <= alpha
    raise AssertionError(test.kind)

"""Cross-calibration diagnostics and tests for probabilistic forecasts.

Multiple forecasters issue predictive distributions for the same outcomes; a
cross-calibrated forecaster's probability integral transform stays uniform
even conditionally on what the competitors predicted.  This package bundles
PIT-based diagnostics, three families of statistical tests (conditional
exceedance probabilities, a linear regression approach, score regressions), a
marginal cross-calibration chi-squared check, the binary-outcome interval
cross-calibration test, simulation scenarios with a Monte Carlo power
harness, and a batch CLI.
"""

from .binary_fs import IntervalForecastSeries, binary_pit_density, fs_pass, fs_profile_stats
from .cep import CepConfig, CepReport, cep_test, data_grid, simulation_grid, westfall_young_adjust
from .dataset import (
    PitSeries,
    PredictionDataset,
    forecast_quantile_matrix,
    pit,
    pit_series,
)
from .diagnostics import (
    ConditioningSpec,
    conditional_pit_histogram,
    marginal_cross_calibration_curve,
)
from .distributions import FAMILIES, Distribution, get_family
from .errors import CrosscalError, DegeneracyError, InputDataError
from .firth import firth_fit, penalized_loglik
from .lra import LraReport, lra_test
from .mct import TABLE_GRIDS, MctDegenerateError, MctReport, mct_test
from .scenarios import (
    PowerResult,
    PowerStudySpec,
    ScenarioSpec,
    TestSpec,
    ar1_dataset,
    ar1_rolling_forecasts,
    power_study,
    simulate,
)
from .special import ad_test_std_normal, chi2_sf, f_sf
from .sra import SraReport, crps_constants, crps_generic, crps_normal, dss, sra_test

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Distribution",
    "FAMILIES",
    "get_family",
    "PredictionDataset",
    "PitSeries",
    "pit",
    "pit_series",
    "forecast_quantile_matrix",
    "ConditioningSpec",
    "conditional_pit_histogram",
    "marginal_cross_calibration_curve",
    "CepConfig",
    "CepReport",
    "cep_test",
    "westfall_young_adjust",
    "simulation_grid",
    "data_grid",
    "LraReport",
    "lra_test",
    "SraReport",
    "sra_test",
    "crps_normal",
    "crps_generic",
    "crps_constants",
    "dss",
    "MctReport",
    "MctDegenerateError",
    "mct_test",
    "TABLE_GRIDS",
    "IntervalForecastSeries",
    "fs_profile_stats",
    "fs_pass",
    "binary_pit_density",
    "ScenarioSpec",
    "TestSpec",
    "PowerStudySpec",
    "PowerResult",
    "simulate",
    "power_study",
    "ar1_rolling_forecasts",
    "ar1_dataset",
    "ad_test_std_normal",
    "chi2_sf",
    "f_sf",
    "firth_fit",
    "penalized_loglik",
    "CrosscalError",
    "InputDataError",
    "DegeneracyError",
]

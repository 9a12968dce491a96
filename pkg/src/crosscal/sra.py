"""Score regression approach (SRA) tests.

Realized scores of the tested forecaster are regressed on the predictive
scales of a set of forecasters; an ideal forecaster pins the coefficients to
known values (intercept and own-scale slope), which a Wald chi-squared
statistic checks.  Two scores are supported:

* CRPS against the predictive standard deviations, fitted by weighted least
  squares with weights 1 / sigma of the tested forecaster.  Valid when all
  forecasts come from a single location-scale family; under ideal forecasting
  E[CRPS] = d sigma with a family constant d (1/sqrt(pi) for the normal).
* DSS against the log predictive standard deviations, fitted by ordinary
  least squares (the DSS has constant variance under ideal forecasting).
  Null: intercept 1/2, own slope 1, other slopes 0.

These tests presuppose independent forecast-observation tuples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .dataset import PredictionDataset
from .distributions import Distribution, Family, get_family
from .errors import DegeneracyError
from .special import chi2_sf, norm_cdf, norm_pdf

__all__ = [
    "crps_normal",
    "crps_generic",
    "dss",
    "crps_constants",
    "SraReport",
    "sra_test",
]

_SQRT_PI = np.sqrt(np.pi)


def crps_normal(mean, sd, y):
    """Closed-form CRPS of a normal forecast, vectorized.

    Raises
    ------
    ValueError
        If any ``sd`` is not positive.
    """
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    if np.any(sd <= 0):
        raise ValueError("sd must be positive")
    ytil = (np.asarray(y, dtype=float) - mean) / sd
    out = sd * (ytil * (2.0 * norm_cdf(ytil) - 1.0) + 2.0 * norm_pdf(ytil) - 1.0 / _SQRT_PI)
    return out if out.shape else float(out)


def crps_generic(dist: Distribution, y: float, tol: float = 1e-8) -> float:
    """CRPS by adaptive quadrature of the squared CDF-vs-step integrand.

    Splits the axis at the observation, where the integrand has a kink.
    Requires integrable tails (finite first moment).
    """
    y = float(y)
    left = integrate.quad(lambda x: dist.cdf(x) ** 2, -np.inf, y, epsabs=tol, limit=200)[0]
    right = integrate.quad(lambda x: (1.0 - dist.cdf(x)) ** 2, y, np.inf, epsabs=tol, limit=200)[0]
    return left + right


def dss(mean, variance, y):
    """Dawid-Sebastiani score (log predictive variance plus squared z-score)/2.

    Raises
    ------
    ValueError
        If any ``variance`` is not positive.
    """
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if np.any(variance <= 0):
        raise ValueError("variance must be positive")
    ytil2 = (np.asarray(y, dtype=float) - mean) ** 2 / variance
    out = 0.5 * (np.log(variance) + ytil2)
    return out if out.shape else float(out)


# exact constants for the normal family: E CRPS = d sigma, var CRPS = D sigma^2
NORMAL_CRPS_D = 1.0 / _SQRT_PI
NORMAL_CRPS_VAR = 1.0 / 3.0 - (4.0 - np.sqrt(12.0)) / np.pi


def crps_constants(
    family: Family | str,
    *shape_params: float,
    n_outer: int = 10_000,
    n_inner: int = 100,
    seed=0,
) -> tuple[float, float, float, float]:
    """Mean and variance scale constants of the CRPS for a location-scale family.

    For a standardized member X0 of the family, returns (d, D, se_d, se_D)
    where E CRPS = d sigma and var CRPS = D sigma^2 for an ideal forecast with
    standard deviation sigma.  The normal family uses closed forms (zero
    standard errors); other families are estimated by nested Monte Carlo:
    d from mean |X0 - X0'| pairs, D from the variance of E(|X0 - X0'| | X0).

    Raises
    ------
    ValueError
        If the family has no finite second moment for the given parameters.
    """
    fam = get_family(family) if isinstance(family, str) else family
    if fam.id == "normal":
        return NORMAL_CRPS_D, float(NORMAL_CRPS_VAR), 0.0, 0.0
    params = np.asarray(shape_params, dtype=float)
    var = float(fam.var(params))
    if not np.isfinite(var) or var <= 0:
        raise ValueError(f"{fam.id}: no finite positive variance for params {shape_params}")
    rng = np.random.default_rng(seed)
    total = n_outer * n_inner
    x = fam.sample(params, rng, size=total)
    xp = fam.sample(params, rng, size=total)
    diffs = np.abs(x - xp)
    d = float(np.mean(diffs) / (2.0 * np.sqrt(var)))
    se_d = float(np.std(diffs) / np.sqrt(total) / (2.0 * np.sqrt(var)))
    # nested pass: fresh inner draws per outer draw, with the usual
    # correction for the inner estimation noise inflating the outer variance
    cond = np.empty(n_outer)
    inner_var = np.empty(n_outer)
    chunk = max(1, 2_000_000 // n_inner)
    for start in range(0, n_outer, chunk):
        m = min(chunk, n_outer - start)
        outer = fam.sample(params, rng, size=m)
        inner = fam.sample(params, rng, size=(m, n_inner))
        absdiff = np.abs(outer[:, None] - inner)
        cond[start : start + m] = absdiff.mean(axis=1)
        inner_var[start : start + m] = absdiff.var(axis=1, ddof=1)
    dvar = float((np.var(cond, ddof=1) - inner_var.mean() / n_inner) / var)
    se_dvar = float(np.std((cond - cond.mean()) ** 2, ddof=1) / np.sqrt(n_outer) / var)
    return d, dvar, se_d, se_dvar


@dataclass(frozen=True)
class SraReport:
    tested: int
    conditioning: tuple[int, ...]
    score: str
    coefficients: np.ndarray
    null_coefficients: np.ndarray
    covariance: np.ndarray
    statistic: float
    pvalue: float
    df: int

    def to_dict(self) -> dict:
        return {
            "test": "sra",
            "score": self.score,
            "tested": self.tested,
            "conditioning": list(self.conditioning),
            "coefficients": list(self.coefficients),
            "null_coefficients": list(self.null_coefficients),
            "statistic": self.statistic,
            "pvalue": self.pvalue,
            "df": self.df,
        }


def _regressor_order(i: int, others) -> list[int]:
    order = [i]
    for j in others:
        if j != i:
            order.append(j)
    return order


def sra_test(ds: PredictionDataset, i: int, others, score: str = "crps") -> SraReport:
    """Wald test of the ideal-forecaster coefficient pattern.

    Parameters
    ----------
    i
        Tested forecaster (its scale is the pinned regressor).
    others
        Additional conditioning forecasters; ``i`` may be included and is
        ignored there (its scale always comes first).
    score
        "crps" (requires normal forecasts) or "dss".

    Raises
    ------
    ValueError
        If some regressor forecaster predicts a constant standard deviation
        (named in the message), or the score requirements are violated.
    """
    score = score.lower()
    if score not in ("crps", "dss"):
        raise ValueError(f"unknown score {score!r}; use 'crps' or 'dss'")
    order = _regressor_order(i, others)
    n = ds.n_rows

    sds = []
    for j in order:
        idx = ds._check_index(j)
        sd = np.asarray(ds.families[idx].sd(ds.params[idx]), dtype=float)
        if not np.all(np.isfinite(sd)) or np.any(sd <= 0):
            raise ValueError(f"{ds.labels[idx]}: predictive standard deviation not finite/positive")
        if np.ptp(sd) < 1e-12:
            raise DegeneracyError(
                f"{ds.labels[idx]} predicts a constant standard deviation; "
                "the score regression needs at least two distinct values"
            )
        sds.append(sd)
    k = len(order)

    ti = ds._check_index(i)
    fam = ds.families[ti]
    if score == "crps":
        if fam.id != "normal":
            raise ValueError("the CRPS regression requires normal forecasts for the tested forecaster")
        scores = crps_normal(ds.params[ti][:, 0], ds.params[ti][:, 1], ds.y)
        regressors = np.column_stack([np.ones(n)] + sds)
        weights = 1.0 / sds[0]
        null = np.array([0.0, NORMAL_CRPS_D] + [0.0] * (k - 1))
    else:
        mean = np.asarray(fam.mean(ds.params[ti]), dtype=float)
        var = np.asarray(fam.var(ds.params[ti]), dtype=float)
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(var)) or np.any(var <= 0):
            raise ValueError(f"{ds.labels[ti]}: finite predictive mean and variance required for DSS")
        scores = dss(mean, var, ds.y)
        regressors = np.column_stack([np.ones(n)] + [np.log(s) for s in sds])
        weights = np.ones(n)
        null = np.array([0.5, 1.0] + [0.0] * (k - 1))

    p = regressors.shape[1]
    if n <= p:
        raise ValueError("need more rows than regression coefficients")
    wroot = np.sqrt(weights)
    dw = regressors * wroot[:, None]
    yw = scores * wroot
    beta, *_ = np.linalg.lstsq(dw, yw, rcond=None)
    resid = yw - dw @ beta
    sigma2 = float(resid @ resid) / (n - p)
    gram_inv = np.linalg.inv(dw.T @ dw)
    cov = sigma2 * gram_inv
    delta = beta - null
    try:
        stat = float(delta @ np.linalg.solve(cov, delta))
    except np.linalg.LinAlgError:
        raise DegeneracyError("singular coefficient covariance") from None
    stat = max(stat, 0.0)
    pval = float(chi2_sf(stat, 1 + k))
    return SraReport(
        tested=i,
        conditioning=tuple(order),
        score=score,
        coefficients=beta,
        null_coefficients=null,
        covariance=cov,
        statistic=stat,
        pvalue=pval,
        df=1 + k,
    )

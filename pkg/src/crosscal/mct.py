"""Marginal cross-calibration chi-squared test.

For grid points y_1 < ... < y_m the per-row discrepancy vector
S_n(y) = F_j,n(y) - 1{F_j,n^{-1}(Z_i,n) <= y} has mean zero under marginal
cross-calibration of forecaster i with respect to forecaster j, and
T = N Sbar' Sigma^{-1} Sbar is asymptotically chi-squared with m degrees of
freedom.  The test is statistically valid but fragile: its p-value can swing
wildly with the grid choice, so reports carry an explicit fragility marker
and near-singular covariance matrices are refused rather than inverted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import PredictionDataset, pit_series
from .errors import DegeneracyError
from .special import chi2_sf

__all__ = ["MctDegenerateError", "MctReport", "TABLE_GRIDS", "mct_test"]

_COND_LIMIT = 1e12

# bundled presets: equally spaced probability levels of a centered normal
# with variance 2, rounded as printed in the reference table
TABLE_GRIDS: dict[str, tuple[float, ...]] = {
    "m3": (-0.95, 0.0, 0.95),
    "m4": (-1.19, -0.35, 0.35, 1.19),
    "m9": (-1.81, -1.19, -0.74, -0.36, 0.0, 0.36, 0.74, 1.19, 1.81),
}


class MctDegenerateError(DegeneracyError):
    """Sample covariance of the discrepancy vectors is (near) singular."""

    def __init__(self, message: str, grid_point: float):
        super().__init__(message)
        self.grid_point = grid_point


@dataclass(frozen=True)
class MctReport:
    tested: int
    reference: int
    grid: tuple[float, ...]
    mean: np.ndarray
    covariance: np.ndarray
    statistic: float
    pvalue: float
    df: int
    fragile: bool = True

    def to_dict(self) -> dict:
        return {
            "test": "mct",
            "tested": self.tested,
            "reference": self.reference,
            "grid": list(self.grid),
            "mean": list(self.mean),
            "statistic": self.statistic,
            "pvalue": self.pvalue,
            "df": self.df,
            "fragile": self.fragile,
        }


def mct_test(ds: PredictionDataset, i: int, j: int, grid) -> MctReport:
    """Test marginal cross-calibration of forecaster ``i`` w.r.t. ``j``.

    Raises
    ------
    MctDegenerateError
        When the sample covariance has condition number above 1e12; the
        message names the grid point most aligned with the degenerate
        direction.
    ValueError
        For an invalid grid or too few rows.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("grid must be a nonempty vector")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    n = ds.n_rows
    m = grid.size
    if n <= m:
        raise ValueError(f"need more rows than grid points ({n} rows, {m} points)")

    jdx = ds._check_index(j)
    z = pit_series(ds, i).values
    fj = ds.families[jdx].cdf(ds.params[jdx][:, None, :], grid[None, :])  # (N, m)
    # F_j^{-1}(z) <= y  <=>  z <= F_j(y) for the generalized inverse
    s = fj - (z[:, None] <= fj)
    sbar = s.mean(axis=0)
    centered = s - sbar
    sigma = centered.T @ centered / n

    eigvals, eigvecs = np.linalg.eigh(sigma)
    if eigvals[-1] <= 0 or eigvals[0] <= 0 or eigvals[-1] / eigvals[0] > _COND_LIMIT:
        worst = int(np.argmax(np.abs(eigvecs[:, 0])))
        raise MctDegenerateError(
            f"sample covariance is numerically singular (condition number above {_COND_LIMIT:.0e}); "
            f"grid point y={grid[worst]:g} dominates the degenerate direction",
            grid_point=float(grid[worst]),
        )
    stat = float(n * sbar @ np.linalg.solve(sigma, sbar))
    stat = max(stat, 0.0)
    return MctReport(
        tested=i,
        reference=j,
        grid=tuple(float(y) for y in grid),
        mean=sbar,
        covariance=sigma,
        statistic=stat,
        pvalue=float(chi2_sf(stat, m)),
        df=m,
    )

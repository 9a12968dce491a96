"""Diagnostic plot data for cross-calibration checks.

Two tools, both returned as plain data (rendering is out of scope):

* marginal cross-calibration curves: the difference between the average
  predictive CDF of forecaster j and the empirical CDF of forecaster j's
  quantile function applied to forecaster i's PIT values.  Flat at zero when
  forecaster i is marginally cross-calibrated with respect to j.
* conditional PIT histograms: PIT cell counts of the tested forecaster within
  bins of a conditioning value (one predicted parameter, or the derived
  predictive standard deviation, of some forecaster).  Flat histograms in
  every bin are the visual signature of cross-calibration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import PredictionDataset, pit_series

__all__ = [
    "MarginalCurve",
    "ConditioningSpec",
    "ConditionalPitHistogram",
    "default_curve_grid",
    "marginal_cross_calibration_curve",
    "equal_count_bins",
    "conditional_pit_histogram",
]


@dataclass(frozen=True)
class MarginalCurve:
    tested: int
    reference: int
    grid: np.ndarray
    delta: np.ndarray

    def rows(self):
        """(y, delta) pairs for CSV emission."""
        return list(zip(self.grid.tolist(), self.delta.tolist()))


def default_curve_grid(ds: PredictionDataset, points: int = 201) -> np.ndarray:
    """Equally spaced grid spanning the outcomes plus one standard deviation."""
    spread = float(np.std(ds.y)) or 1.0
    return np.linspace(ds.y.min() - spread, ds.y.max() + spread, points)


def marginal_cross_calibration_curve(
    ds: PredictionDataset,
    i: int,
    j: int,
    grid: np.ndarray | None = None,
) -> MarginalCurve:
    """Empirical marginal cross-calibration discrepancy of i w.r.t. j.

    At each grid value y the curve is mean_t F_j,t(y) minus the fraction of
    rows with F_j,t^{-1}(Z_i,t) <= y; the indicator is evaluated through the
    equivalent condition Z_i,t <= F_j,t(y) of the generalized inverse.
    """
    grid = default_curve_grid(ds) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    jdx = ds._check_index(j)
    z = pit_series(ds, i).values
    fj = ds.families[jdx].cdf(ds.params[jdx][:, None, :], grid[None, :])  # (N, m)
    delta = fj.mean(axis=0) - (z[:, None] <= fj).mean(axis=0)
    return MarginalCurve(tested=i, reference=j, grid=grid, delta=delta)


@dataclass(frozen=True)
class ConditioningSpec:
    """Which value to condition on and how to bin it.

    ``parameter`` is a parameter name of the forecaster's family or "sd" for
    the derived predictive standard deviation.  ``bins`` are (lo, hi] pairs;
    infinities are allowed.  Rows falling in no bin are counted as unbinned,
    never dropped silently.
    """

    forecaster: int
    parameter: str
    bins: Sequence[tuple[float, float]]


@dataclass(frozen=True)
class ConditionalPitHistogram:
    tested: int
    spec: ConditioningSpec
    cells: int
    counts: np.ndarray  # (n_bins, cells)
    bin_totals: np.ndarray
    unbinned: int

    @property
    def total(self) -> int:
        return int(self.counts.sum() + self.unbinned)


def equal_count_bins(values: np.ndarray, n_bins: int) -> list[tuple[float, float]]:
    """Quantile bins holding roughly the same number of observations each."""
    if n_bins < 1:
        raise ValueError("need at least one bin")
    qs = np.quantile(values, np.linspace(0.0, 1.0, n_bins + 1))
    qs[0], qs[-1] = -np.inf, np.inf
    return [(float(qs[k]), float(qs[k + 1])) for k in range(n_bins)]


def conditioning_values(ds: PredictionDataset, forecaster: int, parameter: str) -> np.ndarray:
    idx = ds._check_index(forecaster)
    fam = ds.families[idx]
    if parameter == "sd":
        return np.asarray(fam.sd(ds.params[idx]), dtype=float)
    if parameter not in fam.param_names:
        raise ValueError(
            f"{ds.labels[idx]} ({fam.id}) has no parameter {parameter!r}; "
            f"choose one of {fam.param_names} or 'sd'"
        )
    return ds.params[idx][:, fam.param_names.index(parameter)]


def conditional_pit_histogram(
    ds: PredictionDataset,
    i: int,
    cond: ConditioningSpec,
    cells: int = 10,
) -> ConditionalPitHistogram:
    """PIT histogram of forecaster ``i`` within each conditioning bin.

    Raises
    ------
    ValueError
        For fewer than two PIT cells or an empty bin list.
    """
    if cells < 2:
        raise ValueError("need at least two PIT cells")
    bins = list(cond.bins)
    if not bins:
        raise ValueError("need at least one conditioning bin")
    z = pit_series(ds, i).values
    values = conditioning_values(ds, cond.forecaster, cond.parameter)
    # PIT cell index; the top edge closes so z = 1 lands in the last cell
    cell = np.minimum((z * cells).astype(int), cells - 1)
    counts = np.zeros((len(bins), cells), dtype=int)
    assigned = np.zeros(ds.n_rows, dtype=bool)
    for b, (lo, hi) in enumerate(bins):
        in_bin = (values > lo) & (values <= hi) & ~assigned
        assigned |= in_bin
        counts[b] = np.bincount(cell[in_bin], minlength=cells)
    return ConditionalPitHistogram(
        tested=i,
        spec=cond,
        cells=cells,
        counts=counts,
        bin_totals=counts.sum(axis=1),
        unbinned=int((~assigned).sum()),
    )

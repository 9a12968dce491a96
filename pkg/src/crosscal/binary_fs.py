"""Binary-outcome cross-calibration machinery.

Two forecasters issue interval predictions for the success probability of a
binary outcome: the unit interval is split into n equal closed subintervals
and each forecaster names one per period.  A forecasting profile is the pair
of named intervals; a forecaster passes the finite-sample cross-calibration
check when, for every profile that occurred, the realized success frequency
falls inside her own predicted interval.

Also provides the exact conditional density of the randomized PIT of a binary
forecast, a two-piece constant on [0, 1] that is flat exactly under
conditional calibration; it serves as the oracle for the equivalence between
PIT uniformity and conditional calibration in the binary case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "IntervalForecastSeries",
    "interval_index",
    "fs_profile_stats",
    "fs_pass",
    "binary_pit_density",
]


def interval_index(x, n: int):
    """Index (1-based) of the closed subinterval [(l-1)/n, l/n] containing x.

    Values on a shared endpoint go to the lower-indexed interval; 0 maps to 1.
    """
    x = np.asarray(x, dtype=float)
    idx = np.ceil(n * x).astype(int)
    out = np.clip(idx, 1, n)
    return out if out.shape else int(out)


@dataclass(frozen=True)
class IntervalForecastSeries:
    """Interval predictions of two forecasters plus binary outcomes."""

    n: int
    intervals1: np.ndarray
    intervals2: np.ndarray
    outcomes: np.ndarray

    def __post_init__(self):
        if self.n <= 4:
            raise ValueError("interval resolution must exceed 4")
        i1 = np.asarray(self.intervals1, dtype=int)
        i2 = np.asarray(self.intervals2, dtype=int)
        w = np.asarray(self.outcomes, dtype=int)
        if not (i1.shape == i2.shape == w.shape) or i1.ndim != 1 or i1.size == 0:
            raise ValueError("interval indices and outcomes must be equal-length nonempty vectors")
        for name, arr in (("intervals1", i1), ("intervals2", i2)):
            if np.any((arr < 1) | (arr > self.n)):
                raise ValueError(f"{name}: indices must lie in 1..{self.n}")
        if np.any((w != 0) & (w != 1)):
            raise ValueError("outcomes must be 0 or 1")
        object.__setattr__(self, "intervals1", i1)
        object.__setattr__(self, "intervals2", i2)
        object.__setattr__(self, "outcomes", w)

    @property
    def length(self) -> int:
        return self.outcomes.size


def fs_profile_stats(series: IntervalForecastSeries) -> dict[tuple[int, int], tuple[int, float]]:
    """Occurrence count and conditional success frequency per realized profile."""
    n = series.n
    pid = (series.intervals1 - 1) * n + (series.intervals2 - 1)
    counts = np.bincount(pid, minlength=n * n)
    successes = np.bincount(pid, weights=series.outcomes, minlength=n * n)
    out = {}
    for flat in np.nonzero(counts)[0]:
        profile = (int(flat // n) + 1, int(flat % n) + 1)
        out[profile] = (int(counts[flat]), float(successes[flat] / counts[flat]))
    return out


def fs_pass(series: IntervalForecastSeries, j: int) -> tuple[bool, list[tuple[tuple[int, int], float, int]]]:
    """Check forecaster ``j`` (1 or 2) on every realized profile.

    Returns the pass flag and the failing profiles as (profile, frequency,
    count) triples.  A profile fails when its conditional success frequency
    falls outside the closed interval forecaster j predicted.
    """
    if j not in (1, 2):
        raise ValueError("forecaster must be 1 or 2")
    n = series.n
    failing = []
    for profile, (count, freq) in fs_profile_stats(series).items():
        ell = profile[j - 1]
        if not (ell - 1) / n <= freq <= ell / n:
            failing.append((profile, freq, count))
    return not failing, failing


def binary_pit_density(z, x1: float, q: float):
    """Conditional density of the randomized PIT of a binary forecast.

    ``x1`` is the forecaster's predicted success probability (strictly inside
    (0, 1)), ``q`` the true conditional success probability.  The density is
    q/x1 on [1-x1, 1] and (1-q)/(1-x1) on [0, 1-x1); it integrates to one and
    is identically one iff q equals x1.
    """
    if not 0.0 < x1 < 1.0:
        raise ValueError("x1 must lie strictly inside (0, 1)")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    z = np.asarray(z, dtype=float)
    upper = (z >= 1.0 - x1) & (z <= 1.0)
    lower = (z >= 0.0) & (z < 1.0 - x1)
    out = np.where(upper, q / x1, 0.0) + np.where(lower, (1.0 - q) / (1.0 - x1), 0.0)
    return out if out.shape else float(out)

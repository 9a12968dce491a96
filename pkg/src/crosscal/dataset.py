"""Forecast-observation panels and PIT computation.

A :class:`PredictionDataset` holds, for each of ``k`` forecasters, an ``N x d_i``
matrix of predictive parameter vectors, plus the outcomes and the uniform
randomizers that make the PIT well defined for discontinuous predictive CDFs.
Forecasters may use different families.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .distributions import Family, get_family

__all__ = ["PredictionDataset", "PitSeries", "pit", "pit_series", "forecast_quantile_matrix"]


def pit(dist, y: float, v: float) -> float:
    """Randomized probability integral transform F(y-) + v {F(y) - F(y-)}.

    For a continuous predictive CDF the result equals F(y) and ``v`` is
    irrelevant.
    """
    if not 0.0 <= v <= 1.0:
        raise ValueError("v must lie in [0, 1]")
    left = float(dist.cdf_left(y))
    right = float(dist.cdf(y))
    return left + v * (right - left)


@dataclass(frozen=True)
class PitSeries:
    """PIT values of one forecaster over the dataset rows."""

    forecaster: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("PIT values must be one-dimensional")
        if np.any((vals < 0) | (vals > 1)):
            raise ValueError("PIT values must lie in [0, 1]")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class PredictionDataset:
    """Immutable panel of k forecast tracks, outcomes and PIT randomizers.

    Parameters
    ----------
    families
        One :class:`Family` per forecaster.
    params
        One ``(N, family.dim)`` array per forecaster.
    y
        Outcomes, length N.
    v
        PIT randomizers in [0, 1], length N, or None.  Only needed when some
        forecaster's predictive CDF has jumps; see :meth:`with_randomizers`.
    labels
        Forecaster display names; defaults to F1..Fk.
    serial
        Marks the rows as serially dependent (affects warnings only, not
        computations).
    """

    families: tuple[Family, ...]
    params: tuple[np.ndarray, ...]
    y: np.ndarray
    v: np.ndarray | None = None
    labels: tuple[str, ...] = ()
    serial: bool = False

    def __post_init__(self):
        families = tuple(get_family(f) if isinstance(f, str) else f for f in self.families)
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1 or y.size < 1:
            raise ValueError("y must be a nonempty vector")
        n = y.size
        if len(families) < 1:
            raise ValueError("need at least one forecaster")
        if len(self.params) != len(families):
            raise ValueError("one parameter matrix per forecaster required")
        mats = []
        for i, (fam, mat) in enumerate(zip(families, self.params)):
            mat = np.asarray(mat, dtype=float)
            if mat.ndim == 1:
                mat = mat[:, None]
            if mat.shape != (n, fam.dim):
                raise ValueError(
                    f"forecaster {i + 1}: parameter matrix must be {(n, fam.dim)}, got {mat.shape}"
                )
            fam.validate(mat)
            mats.append(mat)
        v = self.v
        if v is not None:
            v = np.asarray(v, dtype=float)
            if v.shape != (n,):
                raise ValueError("v must have one entry per row")
            if np.any((v < 0) | (v > 1)):
                raise ValueError("v must lie in [0, 1]")
        labels = tuple(self.labels) or tuple(f"F{i + 1}" for i in range(len(families)))
        if len(labels) != len(families):
            raise ValueError("one label per forecaster required")
        object.__setattr__(self, "families", families)
        object.__setattr__(self, "params", tuple(mats))
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "labels", labels)

    @property
    def n_rows(self) -> int:
        return self.y.size

    @property
    def n_forecasters(self) -> int:
        return len(self.families)

    def with_randomizers(self, seed) -> "PredictionDataset":
        """Return a copy with ``v`` drawn once from ``seed`` (no-op if present)."""
        if self.v is not None:
            return self
        rng = np.random.default_rng(seed)
        return replace(self, v=rng.random(self.n_rows))

    def _check_index(self, i: int) -> int:
        if not 1 <= i <= self.n_forecasters:
            raise IndexError(f"forecaster index {i} outside 1..{self.n_forecasters}")
        return i - 1


def pit_series(ds: PredictionDataset, i: int) -> PitSeries:
    """PIT values of forecaster ``i`` (1-based) across all rows.

    Deterministic given the dataset: the stored randomizers are used for any
    CDF jumps.  Raises if jumps occur and the dataset carries no randomizers.
    """
    idx = ds._check_index(i)
    fam = ds.families[idx]
    right = fam.cdf(ds.params[idx], ds.y)
    if fam.continuous:
        return PitSeries(i, np.clip(right, 0.0, 1.0))
    left = fam.cdf_left(ds.params[idx], ds.y)
    if ds.v is None:
        raise ValueError(
            "dataset has no PIT randomizers; call with_randomizers(seed) first "
            f"(forecaster {ds.labels[idx]} has a discontinuous CDF)"
        )
    vals = left + ds.v * (right - left)
    return PitSeries(i, np.clip(vals, 0.0, 1.0))


def forecast_quantile_matrix(ds: PredictionDataset, J, z: float) -> np.ndarray:
    """N x |J| matrix of forecaster quantiles at level ``z``.

    Column order follows ``J``.  ``z`` must lie strictly inside (0, 1).
    """
    if not 0.0 < z < 1.0:
        raise ValueError("quantile level must lie strictly inside (0, 1)")
    J = list(J)
    out = np.empty((ds.n_rows, len(J)), dtype=float)
    for col, i in enumerate(J):
        idx = ds._check_index(i)
        out[:, col] = ds.families[idx].quantile(ds.params[idx], z)
    return out


def forecast_quantile_cube(ds: PredictionDataset, J, grid) -> np.ndarray:
    """Quantiles for a whole level grid at once, shape (M, N, |J|).

    Equivalent to stacking :func:`forecast_quantile_matrix` over ``grid`` but
    evaluates each forecaster's quantile function once on a broadcast array.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any((grid <= 0.0) | (grid >= 1.0)):
        raise ValueError("quantile levels must lie strictly inside (0, 1)")
    J = list(J)
    out = np.empty((grid.size, ds.n_rows, len(J)), dtype=float)
    for col, i in enumerate(J):
        idx = ds._check_index(i)
        vals = ds.families[idx].quantile(ds.params[idx][:, None, :], grid[None, :])
        out[:, :, col] = np.asarray(vals).T
    return out

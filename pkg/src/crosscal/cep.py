"""Conditional exceedance probability (CEP) test.

For a grid of levels z the indicator that the tested forecaster's PIT falls
below z is regressed, via Firth-penalized logistic regression, on the
competing forecasters' predicted z-quantiles.  Under cross-calibration the
intercept is logit(z) and all quantile coefficients vanish; a penalized
likelihood-ratio statistic against that fixed null gives a pointwise p-value
per level.  The pointwise p-values are combined with the Westfall-Young
step-down min-p bootstrap, which controls the familywise error rate over the
whole grid without assuming the pointwise p-values are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import PredictionDataset, forecast_quantile_cube, forecast_quantile_matrix, pit_series
from .design import DroppedColumn, build_with_intercept
from .firth import firth_fit_batch, firth_fit_grid
from .special import chi2_sf, logit

__all__ = [
    "CepConfig",
    "CepPointwise",
    "CepReport",
    "simulation_grid",
    "data_grid",
    "cep_pointwise",
    "westfall_young_adjust",
    "simulate_null_pvalues",
    "cep_test",
]

# batch members are chunked so the (N, L, p) work arrays stay small
_CHUNK_BUDGET = 4_000_000


def simulation_grid() -> np.ndarray:
    """20 levels from 0.05 to 0.95, the simulation-study default."""
    m = np.arange(20)
    return (1.0 + (18.0 / 19.0) * m) / 20.0


def data_grid() -> np.ndarray:
    """150 levels from 1/150 to 149/150, the single-dataset default."""
    m = np.arange(150)
    return (1.0 + (148.0 / 149.0) * m) / 150.0


DEFAULT_BOOTSTRAP_SIMULATION = 500
DEFAULT_BOOTSTRAP_DATA = 20_000


@dataclass(frozen=True)
class CepConfig:
    """Grid, bootstrap size and seed for one CEP run."""

    grid: np.ndarray = field(default_factory=simulation_grid)
    bootstrap: int = DEFAULT_BOOTSTRAP_SIMULATION
    alpha: float = 0.05
    seed: int | tuple | None = None

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size < 1:
            raise ValueError("grid must be a nonempty vector")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if grid[0] <= 0.0 or grid[-1] >= 1.0:
            raise ValueError("grid must lie strictly inside (0, 1)")
        if self.bootstrap < 1:
            raise ValueError("bootstrap count must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        object.__setattr__(self, "grid", grid)


@dataclass(frozen=True)
class CepPointwise:
    z: float
    beta: np.ndarray
    statistic: float
    pvalue: float
    adjusted: float
    df: int


@dataclass(frozen=True)
class CepReport:
    tested: int
    conditioning: tuple[int, ...]
    pointwise: tuple[CepPointwise, ...]
    alpha: float
    bootstrap: int
    seed: int | tuple | None
    dropped: tuple[tuple[float, DroppedColumn], ...]

    @property
    def min_adjusted(self) -> float:
        return min(p.adjusted for p in self.pointwise)

    @property
    def reject(self) -> bool:
        return self.min_adjusted <= self.alpha

    def to_dict(self) -> dict:
        return {
            "test": "cep",
            "tested": self.tested,
            "conditioning": list(self.conditioning),
            "alpha": self.alpha,
            "bootstrap": self.bootstrap,
            "seed": _seed_json(self.seed),
            "reject": bool(self.reject),
            "min_adjusted_pvalue": self.min_adjusted,
            "dropped_columns": [
                {"z": z, "column": d.label, "reason": d.reason} for z, d in self.dropped
            ],
            "pointwise": [
                {
                    "z": p.z,
                    "beta": list(p.beta),
                    "statistic": p.statistic,
                    "pvalue": p.pvalue,
                    "adjusted_pvalue": p.adjusted,
                    "df": p.df,
                }
                for p in self.pointwise
            ],
        }


def _seed_json(seed):
    if seed is None or isinstance(seed, int):
        return seed
    return list(seed)


def _null_beta(z: float, p: int) -> np.ndarray:
    gamma = np.zeros(p)
    gamma[0] = logit(z)
    return gamma


def _pointwise_design(ds: PredictionDataset, J, z: float):
    """Design [1 | kept F_i^{-1}(z) columns], its null coefficient and drop log."""
    J = list(J)
    quantiles = forecast_quantile_matrix(ds, J, z)
    labels = [f"{ds.labels[i - 1]}@quantile" for i in J]
    X, _, dropped = build_with_intercept(quantiles, labels)
    gamma = _null_beta(z, X.shape[1])
    return X, gamma, dropped


def _designs_for_grid(ds: PredictionDataset, J, grid):
    """Pointwise designs for every level of ``grid`` (shared quantile pass)."""
    J = list(J)
    cube = forecast_quantile_cube(ds, J, grid)
    labels = [f"{ds.labels[i - 1]}@quantile" for i in J]
    designs = []
    for m, z in enumerate(grid):
        X, _, dropped = build_with_intercept(cube[m], labels)
        designs.append((X, _null_beta(float(z), X.shape[1]), dropped))
    return designs


def _gamma_loglik(X: np.ndarray, gamma: np.ndarray, b_sum, n: int) -> np.ndarray:
    """Penalized log-likelihood at the null coefficients, given sum(B) per member.

    At gamma every linear predictor equals logit(z), so the likelihood depends
    on B only through its sum and the penalty not at all.
    """
    eta0 = gamma[0]
    pi0 = 1.0 / (1.0 + np.exp(-eta0))
    w0 = pi0 * (1.0 - pi0)
    sign, logdet = np.linalg.slogdet(w0 * (X.T @ X))
    if sign <= 0:
        raise ValueError("degenerate information at the null coefficients")
    softplus0 = np.logaddexp(0.0, eta0)
    return eta0 * np.asarray(b_sum, dtype=float) - n * softplus0 + 0.5 * logdet


def _pointwise_from_responses(X, gamma, B) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(T, pvalue, beta) for each response column of B against the fixed null."""
    n, p = X.shape
    B = np.asarray(B, dtype=float)
    single = B.ndim == 1
    if single:
        B = B[:, None]
    ll0 = _gamma_loglik(X, gamma, B.sum(axis=0), n)
    chunk = max(1, int(_CHUNK_BUDGET // max(n * p, 1)))
    betas, stats = [], []
    for start in range(0, B.shape[1], chunk):
        piece = B[:, start : start + chunk]
        beta, llp, _ = firth_fit_batch(X, piece, start=gamma)
        t = 2.0 * (llp - ll0[start : start + chunk])
        betas.append(beta)
        stats.append(t)
    stat = np.clip(np.concatenate(stats), 0.0, None)
    pval = chi2_sf(stat, p)
    return stat, pval, np.concatenate(betas, axis=1)


def cep_pointwise(ds: PredictionDataset, i: int, J, z: float):
    """Single-level CEP likelihood-ratio test.

    Returns
    -------
    (statistic, pvalue, beta)
        The nonnegative penalized LRT statistic, its chi-squared upper-tail
        p-value with df = number of retained columns, and the fitted
        coefficients.
    """
    if not 0.0 < z < 1.0:
        raise ValueError("level z must lie strictly inside (0, 1)")
    zvals = pit_series(ds, i).values
    X, gamma, _ = _pointwise_design(ds, J, z)
    if ds.n_rows <= X.shape[1]:
        raise ValueError("need more rows than design columns")
    b = (zvals <= z).astype(float)
    stat, pval, beta = _pointwise_from_responses(X, gamma, b)
    return float(stat[0]), float(pval[0]), beta[:, 0]


def westfall_young_adjust(raw: np.ndarray, null_pvalues: np.ndarray) -> np.ndarray:
    """Step-down min-p adjusted p-values.

    Parameters
    ----------
    raw
        Observed pointwise p-values, length M.
    null_pvalues
        (L, M) array of pointwise p-values recomputed on L null resamples.

    Notes
    -----
    The ordering permutation is the stable ascending sort of ``raw`` (ties
    keep grid order) and is held fixed; for each resample the suffix minima of
    the reordered p-values are compared against the observed values.  No
    monotonicity enforcement is applied to the output.
    """
    raw = np.asarray(raw, dtype=float)
    null_pvalues = np.asarray(null_pvalues, dtype=float)
    m = raw.size
    if null_pvalues.ndim != 2 or null_pvalues.shape[1] != m:
        raise ValueError("null p-value array must be (L, M)")
    order = np.argsort(raw, kind="stable")
    inverse = np.empty(m, dtype=int)
    inverse[order] = np.arange(m)
    reordered = null_pvalues[:, order]
    suffix_min = np.minimum.accumulate(reordered[:, ::-1], axis=1)[:, ::-1]
    return np.mean(suffix_min[:, inverse] <= raw[None, :], axis=0)


def _bootstrap_uniforms(n: int, L: int, seed) -> np.ndarray:
    """(n, L) uniforms; column l comes from the stream keyed by (seed, l)."""
    u = np.empty((n, L))
    for ell in range(L):
        key = (ell,) if seed is None else (_as_key(seed) + (ell,))
        u[:, ell] = np.random.default_rng(key).random(n)
    return u


def _as_key(seed) -> tuple:
    return (seed,) if isinstance(seed, int) else tuple(seed)


def simulate_null_pvalues(designs, grid, n: int, L: int, seed) -> np.ndarray:
    """(L, M) pointwise p-values under the global null.

    One shared uniform vector per resample drives the exceedance indicators at
    every level, preserving the dependence across the grid.
    """
    u = _bootstrap_uniforms(n, L, seed)
    out = np.empty((L, len(grid)))
    for m, z in enumerate(grid):
        X, gamma, _ = designs[m]
        chunk = max(1, int(_CHUNK_BUDGET // max(n * X.shape[1], 1)))
        for start in range(0, L, chunk):
            bstar = (u[:, start : start + chunk] <= z).astype(float)
            _, pval = _grid_lrt(X[None], gamma[None], bstar[None])
            out[start : start + chunk, m] = pval[0]
    return out


def _grouped_by_width(designs_m):
    """Group replicate indices by retained design width."""
    groups: dict[int, list[int]] = {}
    for r, (X, _, _) in enumerate(designs_m):
        groups.setdefault(X.shape[1], []).append(r)
    return groups


def cep_power_study(
    make_dataset,
    i: int,
    J,
    config: CepConfig,
    replications: int,
    seed,
    rep_chunk: int | None = None,
):
    """Monte Carlo rejection rate of the CEP test over fresh scenario draws.

    Parameters
    ----------
    make_dataset
        Callable ``rng -> PredictionDataset`` drawing one replicate.
    config
        CEP configuration; its ``seed`` field is ignored, the bootstrap of
        replicate r uses streams keyed by (seed, 1, r, l).
    seed
        Master seed.  Replicate r's data comes from the stream (seed, 0, r),
        so results do not depend on chunking.

    Returns
    -------
    (rejections, replications, errors)
        Count of replicates with min adjusted p-value <= alpha, the number of
        successful replicates, and a list of (replicate, message) failures.

    Notes
    -----
    Equivalent to calling :func:`cep_test` once per replicate with seed
    (seed, 1, r); all replicates of a chunk are fitted in one problem grid,
    which is much faster than the sequential loop.
    """
    J = list(J)
    grid = config.grid
    L = config.bootstrap
    rejections = 0
    completed = 0
    errors: list[tuple[int, str]] = []

    if rep_chunk is None:
        try:
            n = make_dataset(np.random.default_rng(_as_key(seed) + (0, 0))).n_rows
        except Exception:  # noqa: BLE001 - the loop below reports it per replicate
            n = 1
        rep_chunk = int(np.clip(2_000_000 // max(n * (L + 1), 1), 8, 64))

    for chunk_start in range(0, replications, rep_chunk):
        reps = range(chunk_start, min(chunk_start + rep_chunk, replications))
        rep_designs, pits, uniforms, rep_ids = [], [], [], []
        for r in reps:
            try:
                ds = make_dataset(np.random.default_rng(_as_key(seed) + (0, r)))
                zvals = pit_series(ds, i).values
                rep_designs.append(_designs_for_grid(ds, J, grid))
            except Exception as exc:  # noqa: BLE001 - error budget is reported
                errors.append((r, str(exc)))
                continue
            pits.append(zvals)
            uniforms.append(_bootstrap_uniforms(ds.n_rows, L, _as_key(seed) + (1, r)))
            rep_ids.append(r)
        if not rep_ids:
            continue
        G = len(rep_ids)
        raw = np.empty((G, grid.size))
        pstar = np.empty((G, L, grid.size))
        try:
            for m, z in enumerate(grid):
                designs_m = [d[m] for d in rep_designs]
                for _, members in _grouped_by_width(designs_m).items():
                    Xs = np.stack([designs_m[r][0] for r in members])
                    gammas = np.stack([designs_m[r][1] for r in members])
                    if Xs.shape[1] <= Xs.shape[2]:
                        raise ValueError("need more rows than design columns")
                    Bs = np.empty((len(members), Xs.shape[1], L + 1))
                    for gi, r in enumerate(members):
                        Bs[gi, :, :L] = uniforms[r] <= z
                        Bs[gi, :, L] = pits[r] <= z
                    stat, pval = _grid_lrt(Xs, gammas, Bs)
                    for gi, r in enumerate(members):
                        pstar[r, :, m] = pval[gi, :L]
                        raw[r, m] = pval[gi, L]
        except Exception as exc:  # noqa: BLE001
            for r in rep_ids:
                errors.append((r, str(exc)))
            continue
        for gi in range(G):
            adjusted = westfall_young_adjust(raw[gi], pstar[gi])
            completed += 1
            if adjusted.min() <= config.alpha:
                rejections += 1
    return rejections, completed, errors


def _grid_lrt(Xs, gammas, Bs):
    """LRT statistics and p-values for a (G, L) grid against fixed nulls.

    All-zero and all-one response columns are identical within a design and
    converge slowest (their optimum is approached linearly), so they are
    fitted once per design and broadcast back.
    """
    G, n, p = Xs.shape
    L = Bs.shape[2]
    sums = Bs.sum(axis=1)  # (G, L)
    ll0 = np.empty((G, L))
    for g in range(G):
        ll0[g] = _gamma_loglik(Xs[g], gammas[g], sums[g], n)

    zero, full = sums == 0, sums == n
    degenerate = zero | full
    llp = np.empty((G, L))
    if degenerate.any():
        edge = np.concatenate([np.zeros((G, n, 1)), np.ones((G, n, 1))], axis=2)
        _, llp_edge, _ = firth_fit_grid(Xs, edge, start=gammas)
        main = Bs.copy()
        # overwrite degenerate columns with a benign response so the main fit
        # never sees them; their entries are replaced below
        rows = np.arange(n) % 2
        main[np.broadcast_to(degenerate[:, None, :], main.shape)] = np.broadcast_to(
            rows[None, :, None], main.shape
        )[np.broadcast_to(degenerate[:, None, :], main.shape)]
        _, llp, _ = firth_fit_grid(Xs, main, start=gammas)
        llp = np.where(zero, llp_edge[:, :1], np.where(full, llp_edge[:, 1:], llp))
    else:
        _, llp, _ = firth_fit_grid(Xs, Bs, start=gammas)
    stat = np.clip(2.0 * (llp - ll0), 0.0, None)
    return stat, chi2_sf(stat, p)


def cep_test(ds: PredictionDataset, i: int, J, config: CepConfig | None = None) -> CepReport:
    """Run the CEP test of forecaster ``i`` with respect to ``J``.

    The global null is rejected at level alpha when the smallest adjusted
    p-value falls below alpha.
    """
    config = config or CepConfig()
    seed = config.seed
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (2**63))
    J = list(J)
    zvals = pit_series(ds, i).values
    n = ds.n_rows

    designs = _designs_for_grid(ds, J, config.grid)
    dropped: list[tuple[float, DroppedColumn]] = []
    raw = np.empty(config.grid.size)
    stats = np.empty(config.grid.size)
    betas = []
    dfs = []
    for m, z in enumerate(config.grid):
        X, gamma, drop_m = designs[m]
        if n <= X.shape[1]:
            raise ValueError("need more rows than design columns")
        dropped.extend((float(z), d) for d in drop_m)
        b = (zvals <= z).astype(float)
        stat, pval, beta = _pointwise_from_responses(X, gamma, b)
        raw[m] = pval[0]
        stats[m] = stat[0]
        betas.append(beta[:, 0])
        dfs.append(X.shape[1])

    pstar = simulate_null_pvalues(designs, config.grid, n, config.bootstrap, seed)
    adjusted = westfall_young_adjust(raw, pstar)

    pointwise = tuple(
        CepPointwise(
            z=float(z),
            beta=betas[m],
            statistic=float(stats[m]),
            pvalue=float(raw[m]),
            adjusted=float(adjusted[m]),
            df=dfs[m],
        )
        for m, z in enumerate(config.grid)
    )
    return CepReport(
        tested=i,
        conditioning=tuple(J),
        pointwise=pointwise,
        alpha=config.alpha,
        bootstrap=config.bootstrap,
        seed=seed,
        dropped=tuple(dropped),
    )

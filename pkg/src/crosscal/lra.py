"""Linear regression approach (LRA) test.

The probit-transformed PIT of the tested forecaster is regressed on an
intercept plus the predicted parameter vectors of the conditioning
forecasters.  Under cross-calibration the transformed PITs are iid standard
normal, so two things must hold at once: every regression coefficient
(intercept included) vanishes, checked by an F statistic, and the residuals
look standard normal, checked by the fully specified Anderson-Darling test.
The two p-values are combined by Holm's rule, 2 min(p_F, p_AD) capped at 1.

With an empty conditioning set the design is the lone intercept and the
procedure reduces to a test of probabilistic calibration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import PredictionDataset, pit_series
from .design import DroppedColumn, build_with_intercept
from .special import ad_test_std_normal, f_sf, norm_ppf

__all__ = ["LraReport", "build_design", "lra_test"]

_PIT_CLAMP = 1e-10


@dataclass(frozen=True)
class LraReport:
    tested: int
    conditioning: tuple[int, ...]
    beta: np.ndarray
    f_statistic: float
    p_f: float
    ad_statistic: float
    p_normal: float
    p_adjusted: float
    df_model: int
    df_resid: int
    dropped: tuple[DroppedColumn, ...]
    clamped_pits: int

    def to_dict(self) -> dict:
        return {
            "test": "lra",
            "tested": self.tested,
            "conditioning": list(self.conditioning),
            "beta": list(self.beta),
            "f_statistic": self.f_statistic,
            "p_f": self.p_f,
            "ad_statistic": self.ad_statistic,
            "p_normal": self.p_normal,
            "p_adjusted": self.p_adjusted,
            "df_model": self.df_model,
            "df_resid": self.df_resid,
            "dropped_columns": [{"column": d.label, "reason": d.reason} for d in self.dropped],
            "clamped_pits": self.clamped_pits,
        }


def build_design(ds: PredictionDataset, J) -> tuple[np.ndarray, list[str], list[DroppedColumn]]:
    """Intercept plus parameter columns of the forecasters in ``J``.

    Columns appear forecaster by forecaster in the order of ``J``, each
    forecaster contributing its parameters in family order.  Constant and
    collinear columns are dropped and logged; an empty ``J`` yields the
    pure-intercept design.
    """
    J = list(J)
    cols = []
    labels = []
    for i in J:
        idx = ds._check_index(i)
        fam = ds.families[idx]
        for d, pname in enumerate(fam.param_names):
            cols.append(ds.params[idx][:, d])
            labels.append(f"{ds.labels[idx]}.{pname}")
    candidates = np.column_stack(cols) if cols else np.empty((ds.n_rows, 0))
    return build_with_intercept(candidates, labels)


def lra_test(ds: PredictionDataset, i: int, J) -> LraReport:
    """Run the LRA test of forecaster ``i`` with respect to ``J``.

    Raises
    ------
    ValueError
        If fewer rows than retained design columns plus one are available.
    """
    J = list(J)
    design, labels, dropped = build_design(ds, J)
    n, p = design.shape
    if n <= p + 1:
        raise ValueError(f"need at least {p + 2} rows for {p} design columns, got {n}")

    z = pit_series(ds, i).values
    clamped = int(np.sum((z < _PIT_CLAMP) | (z > 1.0 - _PIT_CLAMP)))
    y = norm_ppf(np.clip(z, _PIT_CLAMP, 1.0 - _PIT_CLAMP))

    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    fitted = design @ beta
    resid = y - fitted
    rss = float(resid @ resid)
    sigma2 = rss / (n - p)
    gram = design.T @ design
    f0 = float(beta @ (gram @ beta) / (p * sigma2))
    p_f = float(f_sf(f0, p, n - p))
    a2, p_normal = ad_test_std_normal(resid)
    p_adj = min(1.0, 2.0 * min(p_f, p_normal))
    return LraReport(
        tested=i,
        conditioning=tuple(J),
        beta=beta,
        f_statistic=f0,
        p_f=p_f,
        ad_statistic=a2,
        p_normal=p_normal,
        p_adjusted=p_adj,
        df_model=p,
        df_resid=n - p,
        dropped=tuple(dropped),
        clamped_pits=clamped,
    )

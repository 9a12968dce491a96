"""Design-matrix assembly with rank-preserving column pruning.

Both regression-based tests regress on predicted parameters or predicted
quantiles of competing forecasters.  Climatological forecasters produce
constant columns and copycat forecasters produce (exactly or numerically)
collinear ones; such columns are removed, and every removal is logged so
reports can show which effective design was tested.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["DroppedColumn", "prune_columns", "build_with_intercept"]

_CONST_TOL = 1e-12
_COLLINEAR_TOL = 1e-8


@dataclass(frozen=True)
class DroppedColumn:
    label: str
    reason: str  # "constant" or "collinear"

    def __str__(self):
        return f"{self.label} ({self.reason})"


def prune_columns(
    candidates: np.ndarray,
    labels: list[str],
) -> tuple[list[int], list[DroppedColumn]]:
    """Select a maximal independent set of candidate columns, given an intercept.

    A column is dropped when its range is below 1e-12 (constant, hence a
    duplicate of the intercept) or when its residual after projecting on the
    intercept and the previously retained columns is negligible (collinear,
    which covers exact duplicates).  Returns retained indices in input order
    plus the drop log.
    """
    n, q = candidates.shape
    kept: list[int] = []
    dropped: list[DroppedColumn] = []
    # orthonormal basis of the span of intercept + retained columns
    basis = [np.full(n, 1.0 / np.sqrt(n))]
    for j in range(q):
        col = candidates[:, j]
        if np.ptp(col) < _CONST_TOL:
            dropped.append(DroppedColumn(labels[j], "constant"))
            continue
        resid = col.astype(float).copy()
        for _ in range(2):  # re-orthogonalize for numerical safety
            for b in basis:
                resid -= (b @ resid) * b
        rnorm = np.linalg.norm(resid)
        if rnorm <= _COLLINEAR_TOL * max(np.linalg.norm(col), 1.0):
            dropped.append(DroppedColumn(labels[j], "collinear"))
            continue
        kept.append(j)
        basis.append(resid / rnorm)
    return kept, dropped


def build_with_intercept(
    candidates: np.ndarray,
    labels: list[str],
) -> tuple[np.ndarray, list[str], list[DroppedColumn]]:
    """Assemble [1 | pruned candidate columns]; see :func:`prune_columns`."""
    n = candidates.shape[0]
    kept, dropped = prune_columns(candidates, labels)
    design = np.column_stack([np.ones(n)] + [candidates[:, j] for j in kept])
    return design, [labels[j] for j in kept], dropped

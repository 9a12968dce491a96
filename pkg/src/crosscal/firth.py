"""Firth-penalized logistic regression.

Maximizes l_p(beta) = l(beta) + 0.5 log det I(beta) where l is the Bernoulli
log-likelihood and I(beta) = X' W X the Fisher information.  The Jeffreys
penalty keeps the maximizer finite under complete separation, which occurs
routinely when thresholding PIT values near 0 or 1.

The solver iterates a grid of problems simultaneously: G design matrices with
L response vectors each.  Responses enter the likelihood and the modified
score only through the sufficient statistic X'B, so the per-iteration work
scales with the linear predictors, not the responses.  Newton steps use the
Fisher information as curvature, guarded by per-member step-halving on l_p.
Extreme-threshold responses (all zeros or ones) converge only linearly under
Fisher scoring, so steps carry an Aitken-style amplification estimated from
consecutive step directions; the halving guard makes that safe.  Once few
members remain active they are compacted into a smaller problem so late
iterations stay cheap.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = ["FirthFit", "penalized_loglik", "firth_fit", "firth_fit_batch", "firth_fit_grid"]

_PI_CLAMP = 1e-12
_SCORE_TOL = 1e-8
_MAX_MOVES = 100
_MAX_HALVINGS = 20
_COMPACT_FRACTION = 0.50
_COMPACT_MIN_MEMBERS = 32


class FirthFit(NamedTuple):
    beta: np.ndarray
    loglik: float
    converged: bool


def _sym_indices(p: int):
    return [(a, b) for a in range(p) for b in range(a, p)]


def _pi_w_softplus(eta):
    """expit(eta) clamped, its variance weight, and log(1+exp(eta)); one exp pass."""
    t = np.exp(-np.abs(eta))
    pi = np.where(eta >= 0, 1.0 / (1.0 + t), t / (1.0 + t))
    np.clip(pi, _PI_CLAMP, 1.0 - _PI_CLAMP, out=pi)
    softplus = np.log1p(t) + np.maximum(eta, 0.0)
    return pi, pi * (1.0 - pi), softplus


def _det_spd(info):
    """Determinant of stacked symmetric matrices, direct for p <= 3."""
    p = info.shape[-1]
    if p == 1:
        return info[..., 0, 0].copy()
    if p == 2:
        return info[..., 0, 0] * info[..., 1, 1] - info[..., 0, 1] * info[..., 1, 0]
    if p == 3:
        a, b, c = info[..., 0, 0], info[..., 0, 1], info[..., 0, 2]
        d, e, f = info[..., 1, 1], info[..., 1, 2], info[..., 2, 2]
        return a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c)
    sign, logdet = np.linalg.slogdet(info)
    return np.where(sign > 0, np.exp(logdet), -1.0)


def _inv_spd(info):
    """Inverse of stacked symmetric positive definite matrices."""
    p = info.shape[-1]
    if p == 1:
        return 1.0 / info
    if p == 2:
        det = info[..., 0, 0] * info[..., 1, 1] - info[..., 0, 1] * info[..., 1, 0]
        out = np.empty_like(info)
        out[..., 0, 0] = info[..., 1, 1]
        out[..., 1, 1] = info[..., 0, 0]
        out[..., 0, 1] = -info[..., 0, 1]
        out[..., 1, 0] = -info[..., 1, 0]
        return out / det[..., None, None]
    if p == 3:
        a, b, c = info[..., 0, 0], info[..., 0, 1], info[..., 0, 2]
        d, e, f = info[..., 1, 1], info[..., 1, 2], info[..., 2, 2]
        ca, cb, cc = d * f - e * e, c * e - b * f, b * e - c * d
        det = a * ca + b * cb + c * cc
        out = np.empty_like(info)
        out[..., 0, 0] = ca
        out[..., 0, 1] = out[..., 1, 0] = cb
        out[..., 0, 2] = out[..., 2, 0] = cc
        out[..., 1, 1] = a * f - c * c
        out[..., 1, 2] = out[..., 2, 1] = b * c - a * e
        out[..., 2, 2] = a * d - b * b
        return out / det[..., None, None]
    try:
        return np.linalg.inv(info)
    except np.linalg.LinAlgError:
        return np.linalg.pinv(info)


class _Grid:
    """Workspace for one (G designs) x (L responses) problem grid.

    Responses are carried as sufficient statistics T = X'B of shape (G, p, L).
    """

    def __init__(self, Xs, T):
        self.Xs = Xs
        self.T = T
        self.n = Xs.shape[1]
        self.p = Xs.shape[2]
        self.pairs = _sym_indices(self.p)
        self.XX = np.stack([Xs[:, :, a] * Xs[:, :, b] for a, b in self.pairs], axis=2)
        self.XsT = np.ascontiguousarray(Xs.transpose(0, 2, 1))

    @classmethod
    def from_responses(cls, Xs, Bs):
        return cls(Xs, np.matmul(Xs.transpose(0, 2, 1), Bs))

    def state(self, beta):
        """pi (G,N,L), w (G,N,L), info (G,L,p,p), llp (G,L) at ``beta``."""
        eta = self.Xs @ beta
        pi, w, softplus = _pi_w_softplus(eta)
        flat = np.matmul(w.transpose(0, 2, 1), self.XX)  # (G, L, q2)
        info = np.empty(flat.shape[:2] + (self.p, self.p))
        for j, (a, b) in enumerate(self.pairs):
            info[:, :, a, b] = flat[:, :, j]
            if a != b:
                info[:, :, b, a] = flat[:, :, j]
        det = _det_spd(info)
        ll = np.einsum("gpl,gpl->gl", self.T, beta) - softplus.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            llp = np.where(det > 0, ll + 0.5 * np.log(np.maximum(det, 1e-300)), -np.inf)
        return pi, w, info, llp

    def score_step(self, pi, w, info):
        """Modified score U* and Newton step, both (G, p, L)."""
        inv = _inv_spd(info)
        coeff = np.empty(inv.shape[:2] + (len(self.pairs),))  # (G, L, q2)
        for j, (a, b) in enumerate(self.pairs):
            coeff[:, :, j] = inv[:, :, a, b] if a == b else 2.0 * inv[:, :, a, b]
        quad = np.matmul(self.XX, coeff.transpose(0, 2, 1))  # (G, N, L)
        adj = pi - (w * quad) * (0.5 - pi)
        score = self.T - np.matmul(self.XsT, adj)
        step = np.matmul(inv, score.transpose(0, 2, 1)[..., None])[..., 0].transpose(0, 2, 1)
        return score, step


def _grid_newton(grid: _Grid, beta: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    g, _, L = beta.shape[0], grid.n, beta.shape[2]
    pi, w, info, llp = grid.state(beta)
    best_beta, best_llp = beta.copy(), llp.copy()
    converged = np.zeros((g, L), dtype=bool)
    stopped = np.zeros((g, L), dtype=bool)  # stalled or out of move budget
    moves = np.zeros((g, L), dtype=np.int32)
    halvings = np.zeros((g, L), dtype=np.int32)
    scale = np.ones((g, L))
    prev_step = np.zeros_like(beta)

    while True:
        score, step = grid.score_step(pi, w, info)
        converged |= np.abs(score).max(axis=1) <= _SCORE_TOL
        active = ~(converged | stopped)
        n_active = int(active.sum())
        if n_active == 0:
            break
        if g * L > _COMPACT_MIN_MEMBERS and n_active <= _COMPACT_FRACTION * g * L:
            gi, li = np.nonzero(active)
            sub = _Grid(grid.Xs[gi], np.ascontiguousarray(grid.T[gi, :, li][:, :, None]))
            # carry the per-member move budget through the fresh subproblem
            init = getattr(grid, "_initial_moves", None)
            carried = moves[gi, li]
            if init is not None:
                carried = carried + np.broadcast_to(init, moves.shape)[gi, li]
            sub._initial_moves = carried[:, None]  # noqa: SLF001 - internal handoff
            sb, sl, sc = _grid_newton_compact(sub, np.ascontiguousarray(beta[gi, :, li][:, :, None]))
            beta[gi, :, li] = sb[:, :, 0]
            llp[gi, li] = sl[:, 0]
            converged[gi, li] = sc[:, 0]
            best_beta = np.where((llp > best_llp)[:, None, :], beta, best_beta)
            best_llp = np.maximum(llp, best_llp)
            break

        # Aitken amplification helps members on a linear convergence path; it
        # is tried once per Newton step (halvings == 0) and, when the
        # amplified trial fails, the plain step and its halvings follow
        num = np.einsum("gpl,gpl->gl", step, prev_step)
        den = np.einsum("gpl,gpl->gl", prev_step, prev_step)
        with np.errstate(invalid="ignore", divide="ignore"):
            lam = np.where(den > 0, num / den, 0.0)
        amp = np.where(
            (halvings == 0) & (lam > 0.2) & (lam < 0.9999),
            1.0 / np.maximum(1.0 - lam, 1e-4),
            1.0,
        )

        eff = step * (scale * amp * active)[:, None, :]
        trial = beta + eff
        stalled = active & np.all(trial == beta, axis=1)
        t_pi, t_w, t_info, t_llp = grid.state(trial)
        forced = active & (halvings >= _MAX_HALVINGS) & np.isfinite(t_llp)
        # slack of a few ulps: near the optimum the improvement of the last
        # Newton steps falls below float resolution and must not be rejected
        slack = 1e-13 * (1.0 + np.abs(llp))
        take = (active & (t_llp >= llp - slack)) | forced
        if take.any():
            tb = np.broadcast_to(take[:, None, :], beta.shape)
            tr = np.broadcast_to(take[:, None, :], pi.shape)
            beta[tb] = trial[tb]
            pi[tr], w[tr] = t_pi[tr], t_w[tr]
            info[take] = t_info[take]
            llp[take] = t_llp[take]
            prev_step[np.broadcast_to(take[:, None, :], step.shape)] = step[
                np.broadcast_to(take[:, None, :], step.shape)
            ]
            moves[take] += 1
            halvings[take] = 0
            scale[take] = 1.0
            better = llp > best_llp
            if better.any():
                bb = np.broadcast_to(better[:, None, :], beta.shape)
                best_beta[bb] = beta[bb]
                best_llp[better] = llp[better]
        failed = active & ~take
        if failed.any():
            # first failure means the amplified trial missed: retry the raw
            # step at full length before halving it
            scale[failed & (halvings > 0)] *= 0.5
            halvings[failed] += 1
            stopped |= failed & stalled
        stopped |= moves >= _grid_move_budget(grid)

    stale = ~converged & (best_llp > llp)
    if stale.any():
        sb = np.broadcast_to(stale[:, None, :], beta.shape)
        beta[sb] = best_beta[sb]
        llp[stale] = best_llp[stale]
    return beta, llp, converged


def _grid_move_budget(grid: _Grid):
    start = getattr(grid, "_initial_moves", None)
    return _MAX_MOVES if start is None else np.maximum(_MAX_MOVES - start, 1)


def _grid_newton_compact(grid: _Grid, beta):
    return _grid_newton(grid, beta)


def firth_fit_grid(
    Xs: np.ndarray,
    Bs: np.ndarray,
    start: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fit a (G designs) x (L responses) grid of Firth logistic regressions.

    Parameters
    ----------
    Xs
        Design matrices, (G, N, p); every design must have full column rank.
    Bs
        Binary responses, (G, N, L).
    start
        Optional starting coefficients: (G, p) per design or (G, p, L) per
        member; zeros otherwise.

    Returns
    -------
    (beta, loglik, converged)
        Arrays of shape (G, p, L), (G, L) and (G, L).  Non-converged members
        (score above 1e-8 after the iteration budget) carry their best visited
        iterate.
    """
    Xs = np.asarray(Xs, dtype=float)
    Bs = np.asarray(Bs, dtype=float)
    g, n, p = Xs.shape
    L = Bs.shape[2]
    if start is None:
        beta = np.zeros((g, p, L))
    else:
        start = np.asarray(start, dtype=float)
        beta = np.repeat(start[:, :, None], L, axis=2) if start.ndim == 2 else start.copy()
    return _grid_newton(_Grid.from_responses(Xs, Bs), beta)


def firth_fit_batch(
    X: np.ndarray,
    B: np.ndarray,
    start: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fit Firth logistic regressions for all response columns of ``B``.

    A convenience wrapper around :func:`firth_fit_grid` for one shared design
    (N, p) and responses (N, L).  Returns beta (p, L), loglik (L,) and a
    converged flag per column.
    """
    X = np.asarray(X, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if start is not None:
        start = np.asarray(start, dtype=float)
        start = start[None, :] if start.ndim == 1 else start[None, :, :]
    beta, llp, conv = firth_fit_grid(X[None], B[None], start=start)
    return beta[0], llp[0], conv[0]


def penalized_loglik(X: np.ndarray, b: np.ndarray, beta: np.ndarray) -> float:
    """Firth-penalized log-likelihood at ``beta``.

    Raises
    ------
    ValueError
        If the Fisher information at ``beta`` is singular ("degenerate
        information").
    """
    X = np.asarray(X, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1, 1)
    beta = np.asarray(beta, dtype=float).reshape(-1, 1)
    grid = _Grid.from_responses(X[None], b[None])
    _, _, _, llp = grid.state(beta[None])
    out = float(llp[0, 0])
    if not np.isfinite(out):
        raise ValueError("degenerate information: X'WX is singular at beta")
    return out


def firth_fit(
    X: np.ndarray,
    b: np.ndarray,
    start: np.ndarray | None = None,
) -> FirthFit:
    """Firth-penalized fit for a single response vector.

    Raises
    ------
    ValueError
        If ``X`` is rank deficient.
    """
    X = np.asarray(X, dtype=float)
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise ValueError("design matrix is rank deficient")
    beta, llp, conv = firth_fit_batch(X, np.asarray(b, dtype=float), start=start)
    return FirthFit(beta[:, 0], float(llp[0]), bool(conv[0]))

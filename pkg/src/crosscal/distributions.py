"""Predictive distribution families.

Each family is represented by a :class:`Family` singleton that operates on
arrays of parameter vectors, so dataset-level code can evaluate a whole
forecast track without constructing per-row objects.  ``Distribution`` bundles
one family with one parameter vector for scalar use.

Families are parametrized as follows (scale parameters strictly positive):

=================  ==========================  =========================================
id                 parameters                  law
=================  ==========================  =========================================
normal             mu, sigma                   N(mu, sigma^2)
student-t          nu                          Student t with nu d.o.f.
two-piece-normal   mu, sig1, sig2              half-normals with scales sig1 (left of
                                               the mode mu) and sig2 (right), glued
normal-mixture     mu, sigma, tau              (1/2) N(mu, sigma^2) + (1/2) N(mu+tau, sigma^2)
bernoulli          p                           point masses 1-p at 0 and p at 1
beta               a, b                        Beta(a, b)
scaled-inv-chisq   nu                          law of nu / X with X ~ chi-squared(nu)
=================  ==========================  =========================================
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .special import norm_cdf, norm_pdf, norm_ppf

__all__ = ["Family", "Distribution", "FAMILIES", "get_family"]

_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)


def _split(params, d):
    params = np.asarray(params, dtype=float)
    if params.shape[-1] != d:
        raise ValueError(f"expected {d} parameters, got shape {params.shape}")
    return tuple(np.moveaxis(params, -1, 0))


class Family:
    """Base class; subclasses implement vectorized cdf/pdf/quantile/sample.

    ``params`` always has the family's parameter count as last axis and
    broadcasts against ``x``/``p``.
    """

    id: str = ""
    param_names: tuple[str, ...] = ()
    continuous: bool = True

    @property
    def dim(self) -> int:
        return len(self.param_names)

    def validate(self, params) -> None:
        """Raise ValueError when any parameter vector is out of range."""
        raise NotImplementedError

    def cdf(self, params, x):
        raise NotImplementedError

    def cdf_left(self, params, x):
        """Left limit F(x-); equals cdf for continuous families."""
        return self.cdf(params, x)

    def pdf(self, params, x):
        raise NotImplementedError

    def quantile(self, params, p):
        raise NotImplementedError

    def sample(self, params, rng, size=None):
        raise NotImplementedError

    def mean(self, params):
        raise NotImplementedError

    def var(self, params):
        raise NotImplementedError

    def sd(self, params):
        return np.sqrt(self.var(params))

    def __repr__(self):
        return f"Family({self.id!r})"


def _check_prob(p):
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError("probability level must lie strictly inside (0, 1)")
    return p


class Normal(Family):
    id = "normal"
    param_names = ("mu", "sigma")

    def validate(self, params):
        _, sigma = _split(params, 2)
        if not np.all(sigma > 0):
            raise ValueError("normal: sigma must be positive")

    def cdf(self, params, x):
        mu, sigma = _split(params, 2)
        return norm_cdf((np.asarray(x, dtype=float) - mu) / sigma)

    def pdf(self, params, x):
        mu, sigma = _split(params, 2)
        return norm_pdf((np.asarray(x, dtype=float) - mu) / sigma) / sigma

    def quantile(self, params, p):
        mu, sigma = _split(params, 2)
        return mu + sigma * norm_ppf(_check_prob(p))

    def sample(self, params, rng, size=None):
        mu, sigma = _split(params, 2)
        shape = np.broadcast_shapes(mu.shape, sigma.shape, () if size is None else tuple(np.atleast_1d(size)))
        return mu + sigma * rng.standard_normal(shape)

    def mean(self, params):
        return _split(params, 2)[0]

    def var(self, params):
        return _split(params, 2)[1] ** 2


class StudentT(Family):
    id = "student-t"
    param_names = ("nu",)

    def validate(self, params):
        (nu,) = _split(params, 1)
        if not np.all(nu > 0):
            raise ValueError("student-t: nu must be positive")

    def cdf(self, params, x):
        (nu,) = _split(params, 1)
        return sp.stdtr(nu, np.asarray(x, dtype=float))

    def pdf(self, params, x):
        (nu,) = _split(params, 1)
        x = np.asarray(x, dtype=float)
        lognorm = sp.gammaln((nu + 1) / 2) - sp.gammaln(nu / 2) - 0.5 * np.log(nu * np.pi)
        return np.exp(lognorm - 0.5 * (nu + 1) * np.log1p(x * x / nu))

    def quantile(self, params, p):
        (nu,) = _split(params, 1)
        return sp.stdtrit(nu, _check_prob(p))

    def sample(self, params, rng, size=None):
        (nu,) = _split(params, 1)
        shape = np.broadcast_shapes(nu.shape, () if size is None else tuple(np.atleast_1d(size)))
        return rng.standard_t(np.broadcast_to(nu, shape))

    def mean(self, params):
        (nu,) = _split(params, 1)
        return np.where(nu > 1, 0.0, np.nan)

    def var(self, params):
        (nu,) = _split(params, 1)
        return np.where(nu > 2, nu / (nu - 2), np.nan)


class TwoPieceNormal(Family):
    id = "two-piece-normal"
    param_names = ("mu", "sig1", "sig2")

    def validate(self, params):
        _, s1, s2 = _split(params, 3)
        if not (np.all(s1 > 0) and np.all(s2 > 0)):
            raise ValueError("two-piece-normal: sig1 and sig2 must be positive")

    def cdf(self, params, x):
        mu, s1, s2 = _split(params, 3)
        x = np.asarray(x, dtype=float)
        total = s1 + s2
        left = 2.0 * s1 / total * norm_cdf((x - mu) / s1)
        right = (s1 - s2) / total + 2.0 * s2 / total * norm_cdf((x - mu) / s2)
        return np.where(x <= mu, left, right)

    def pdf(self, params, x):
        mu, s1, s2 = _split(params, 3)
        x = np.asarray(x, dtype=float)
        scale = np.where(x <= mu, s1, s2)
        z = (x - mu) / scale
        return _SQRT_2_OVER_PI / (s1 + s2) * np.exp(-0.5 * z * z)

    def quantile(self, params, p):
        mu, s1, s2 = _split(params, 3)
        p = _check_prob(p)
        total = s1 + s2
        w = s1 / total  # mass left of the mode
        left = mu + s1 * norm_ppf(np.minimum(p / (2.0 * w), 0.5))
        right = mu + s2 * norm_ppf(np.maximum((p - (s1 - s2) / total) * total / (2.0 * s2), 0.5))
        return np.where(p <= w, left, right)

    def sample(self, params, rng, size=None):
        mu, s1, s2 = _split(params, 3)
        shape = np.broadcast_shapes(mu.shape, s1.shape, s2.shape, () if size is None else tuple(np.atleast_1d(size)))
        absz = np.abs(rng.standard_normal(shape))
        go_left = rng.random(shape) < s1 / (s1 + s2)
        return np.where(go_left, mu - s1 * absz, mu + s2 * absz)

    def mean(self, params):
        mu, s1, s2 = _split(params, 3)
        return mu + _SQRT_2_OVER_PI * (s2 - s1)

    def var(self, params):
        _, s1, s2 = _split(params, 3)
        return (1.0 - 2.0 / np.pi) * (s2 - s1) ** 2 + s1 * s2


class NormalMixture(Family):
    """Equal-weight mixture of N(mu, sigma^2) and N(mu+tau, sigma^2)."""

    id = "normal-mixture"
    param_names = ("mu", "sigma", "tau")

    def validate(self, params):
        _, sigma, _ = _split(params, 3)
        if not np.all(sigma > 0):
            raise ValueError("normal-mixture: sigma must be positive")

    def cdf(self, params, x):
        mu, sigma, tau = _split(params, 3)
        x = np.asarray(x, dtype=float)
        return 0.5 * (norm_cdf((x - mu) / sigma) + norm_cdf((x - mu - tau) / sigma))

    def pdf(self, params, x):
        mu, sigma, tau = _split(params, 3)
        x = np.asarray(x, dtype=float)
        return 0.5 * (norm_pdf((x - mu) / sigma) + norm_pdf((x - mu - tau) / sigma)) / sigma

    def quantile(self, params, p):
        mu, sigma, tau = _split(params, 3)
        p = _check_prob(p)
        base = norm_ppf(p)
        lo = mu + sigma * base + np.minimum(tau, 0.0)
        hi = mu + sigma * base + np.maximum(tau, 0.0)
        lo, hi, mu_b, sigma_b, tau_b, p_b = np.broadcast_arrays(lo, hi, mu, sigma, tau, p)
        lo, hi = lo.astype(float).copy(), hi.astype(float).copy()
        pars = np.stack([mu_b, sigma_b, tau_b], axis=-1)
        # bisection: the root is bracketed between the two component quantiles
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            too_low = self.cdf(pars, mid) < p_b
            lo = np.where(too_low, mid, lo)
            hi = np.where(too_low, hi, mid)
        out = 0.5 * (lo + hi)
        return out if out.shape else float(out)

    def sample(self, params, rng, size=None):
        mu, sigma, tau = _split(params, 3)
        shape = np.broadcast_shapes(mu.shape, sigma.shape, tau.shape, () if size is None else tuple(np.atleast_1d(size)))
        shift = np.where(rng.random(shape) < 0.5, 0.0, tau)
        return mu + shift + sigma * rng.standard_normal(shape)

    def mean(self, params):
        mu, _, tau = _split(params, 3)
        return mu + 0.5 * tau

    def var(self, params):
        _, sigma, tau = _split(params, 3)
        return sigma**2 + 0.25 * tau**2


class Bernoulli(Family):
    id = "bernoulli"
    param_names = ("p",)
    continuous = False

    def validate(self, params):
        (p,) = _split(params, 1)
        if not np.all((p >= 0) & (p <= 1)):
            raise ValueError("bernoulli: p must lie in [0, 1]")

    def cdf(self, params, x):
        (p,) = _split(params, 1)
        x = np.asarray(x, dtype=float)
        out = np.where(x >= 1.0, 1.0, np.where(x >= 0.0, 1.0 - p, 0.0))
        return out

    def cdf_left(self, params, x):
        (p,) = _split(params, 1)
        x = np.asarray(x, dtype=float)
        return np.where(x > 1.0, 1.0, np.where(x > 0.0, 1.0 - p, 0.0))

    def quantile(self, params, p):
        # generalized inverse inf{x : F(x) >= p}
        (q,) = _split(params, 1)
        p = np.asarray(p, dtype=float)
        if np.any((p <= 0) | (p > 1)):
            raise ValueError("probability level must lie in (0, 1]")
        return np.where(p <= 1.0 - q, 0.0, 1.0)

    def sample(self, params, rng, size=None):
        (p,) = _split(params, 1)
        shape = np.broadcast_shapes(p.shape, () if size is None else tuple(np.atleast_1d(size)))
        return (rng.random(shape) < p).astype(float)

    def mean(self, params):
        return _split(params, 1)[0]

    def var(self, params):
        (p,) = _split(params, 1)
        return p * (1.0 - p)


class BetaFamily(Family):
    id = "beta"
    param_names = ("a", "b")

    def validate(self, params):
        a, b = _split(params, 2)
        if not (np.all(a > 0) and np.all(b > 0)):
            raise ValueError("beta: a and b must be positive")

    def cdf(self, params, x):
        a, b = _split(params, 2)
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return sp.betainc(a, b, x)

    def pdf(self, params, x):
        a, b = _split(params, 2)
        x = np.asarray(x, dtype=float)
        inside = (x > 0) & (x < 1)
        xs = np.where(inside, x, 0.5)
        logpdf = (a - 1) * np.log(xs) + (b - 1) * np.log1p(-xs) - sp.betaln(a, b)
        return np.where(inside, np.exp(logpdf), 0.0)

    def quantile(self, params, p):
        a, b = _split(params, 2)
        return sp.betaincinv(a, b, _check_prob(p))

    def sample(self, params, rng, size=None):
        a, b = _split(params, 2)
        shape = np.broadcast_shapes(a.shape, b.shape, () if size is None else tuple(np.atleast_1d(size)))
        return rng.beta(np.broadcast_to(a, shape), np.broadcast_to(b, shape))

    def mean(self, params):
        a, b = _split(params, 2)
        return a / (a + b)

    def var(self, params):
        a, b = _split(params, 2)
        return a * b / ((a + b) ** 2 * (a + b + 1.0))


class ScaledInvChiSq(Family):
    """Law of nu / X with X ~ chi-squared(nu); conjugate variance prior."""

    id = "scaled-inv-chisq"
    param_names = ("nu",)

    def validate(self, params):
        (nu,) = _split(params, 1)
        if not np.all(nu > 0):
            raise ValueError("scaled-inv-chisq: nu must be positive")

    def cdf(self, params, x):
        (nu,) = _split(params, 1)
        x = np.asarray(x, dtype=float)
        pos = x > 0
        xs = np.where(pos, x, 1.0)
        return np.where(pos, sp.chdtrc(nu, nu / xs), 0.0)

    def pdf(self, params, x):
        (nu,) = _split(params, 1)
        x = np.asarray(x, dtype=float)
        pos = x > 0
        xs = np.where(pos, x, 1.0)
        half = nu / 2.0
        logpdf = half * np.log(half) - sp.gammaln(half) - (half + 1.0) * np.log(xs) - half / xs
        return np.where(pos, np.exp(logpdf), 0.0)

    def quantile(self, params, p):
        (nu,) = _split(params, 1)
        return nu / sp.chdtri(nu, _check_prob(p))

    def sample(self, params, rng, size=None):
        (nu,) = _split(params, 1)
        shape = np.broadcast_shapes(nu.shape, () if size is None else tuple(np.atleast_1d(size)))
        return nu / rng.chisquare(np.broadcast_to(nu, shape))

    def mean(self, params):
        (nu,) = _split(params, 1)
        return np.where(nu > 2, nu / (nu - 2), np.nan)

    def var(self, params):
        (nu,) = _split(params, 1)
        return np.where(nu > 4, 2 * nu**2 / ((nu - 2) ** 2 * (nu - 4)), np.nan)


FAMILIES: dict[str, Family] = {
    f.id: f
    for f in (
        Normal(),
        StudentT(),
        TwoPieceNormal(),
        NormalMixture(),
        Bernoulli(),
        BetaFamily(),
        ScaledInvChiSq(),
    )
}


def get_family(family_id: str) -> Family:
    try:
        return FAMILIES[family_id]
    except KeyError:
        raise ValueError(f"unknown family {family_id!r}; known: {sorted(FAMILIES)}") from None


@dataclass(frozen=True)
class Distribution:
    """One predictive distribution: a family plus one parameter vector."""

    family: Family
    params: tuple[float, ...]

    def __post_init__(self):
        if len(self.params) != self.family.dim:
            raise ValueError(
                f"{self.family.id} takes {self.family.dim} parameters, got {len(self.params)}"
            )
        self.family.validate(self._p)

    @property
    def _p(self) -> np.ndarray:
        return np.asarray(self.params, dtype=float)

    @classmethod
    def make(cls, family_id: str, *params: float) -> "Distribution":
        return cls(get_family(family_id), tuple(float(p) for p in params))

    def cdf(self, x):
        return self.family.cdf(self._p, x)

    def cdf_left(self, x):
        return self.family.cdf_left(self._p, x)

    def pdf(self, x):
        return self.family.pdf(self._p, x)

    def quantile(self, p):
        return self.family.quantile(self._p, p)

    def sample(self, rng, size=None):
        return self.family.sample(self._p, rng, size=size)

    def mean(self):
        return float(self.family.mean(self._p))

    def var(self):
        return float(self.family.var(self._p))

    def sd(self):
        return float(self.family.sd(self._p))

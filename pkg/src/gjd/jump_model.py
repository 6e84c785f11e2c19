"""Negative binomial jump counts, their gamma-Poisson form, and lognormal jump sizes."""

from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from .errors import DomainError, OverdispersionError, ValidationError
from .quadrature import integrate

TRADING_DAYS = 252

_BREAK_PROBS = np.array([1e-8, 1e-5, 1e-3, 0.01, 0.05, 0.2, 0.35, 0.5, 0.65, 0.8,
                         0.95, 0.99, 0.999, 1 - 1e-5, 1 - 1e-8])


@dataclass(frozen=True)
class JumpParams:
    """NB(gamma, p) jump counts over one horizon plus lognormal jump sizes.

    The gamma mixing law of the Poisson intensity has shape ``s = gamma`` and
    rate ``tau = p / (1 - p)``. Jump multiples are ``m * exp(-nu^2/2 + nu Z)``.
    """

    gamma: float
    p: float
    m: float = 1.0
    nu: float = 0.0
    horizon: str = "annual"

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if not (0.0 < self.p < 1.0):
            raise DomainError(f"p must lie in (0, 1), got {self.p}")
        if not self.m > 0:
            raise DomainError(f"mean jump multiple m must be positive, got {self.m}")
        if not self.nu >= 0:
            raise DomainError(f"jump log-sd nu must be non-negative, got {self.nu}")
        if self.horizon not in ("annual", "daily"):
            raise DomainError(f"horizon must be 'annual' or 'daily', got {self.horizon!r}")

    @classmethod
    def from_gamma_law(cls, s, tau, **kwargs):
        """Build from the gamma mixing shape ``s`` and rate ``tau``."""
        if not tau > 0:
            raise DomainError(f"tau must be positive, got {tau}")
        return cls(gamma=s, p=tau / (1.0 + tau), **kwargs)

    @property
    def s(self):
        return self.gamma

    @property
    def tau(self):
        return self.p / (1.0 - self.p)

    @property
    def mean(self):
        return self.gamma * (1.0 - self.p) / self.p

    @property
    def variance(self):
        return self.gamma * (1.0 - self.p) / self.p ** 2


def nb_pmf(k, params):
    k = np.asarray(k)
    if np.any(k < 0) or np.any(k != np.floor(k)):
        raise DomainError("k must be a non-negative integer")
    g, p = params.gamma, params.p
    logpmf = (special.gammaln(k + g) - special.gammaln(k + 1.0) - special.gammaln(g)
              + k * np.log1p(-p) + g * np.log(p))
    return np.exp(logpmf)


def fit_nb_mom(counts, *, m=1.0, nu=0.0):
    """Method-of-moments NB fit: ``p = mean/var`` and ``gamma = mean p / (1 - p)``.

    The sample variance uses the ``n - 1`` denominator.
    """
    c = np.asarray(counts, dtype=float)
    if c.size < 2:
        raise ValidationError("need at least two counts")
    if np.any(c < 0):
        raise ValidationError("counts must be non-negative")
    mean = c.mean()
    var = c.var(ddof=1)
    if not var > mean:
        raise OverdispersionError(
            f"sample variance {var:.4g} does not exceed mean {mean:.4g}; "
            "a plain Poisson fit (see fit_poisson) is the appropriate model")
    p = mean / var
    return JumpParams(gamma=mean * p / (1.0 - p), p=p, m=m, nu=nu, horizon="annual")


def fit_poisson(counts):
    """Poisson intensity estimate, reported for comparison only."""
    c = np.asarray(counts, dtype=float)
    if c.size < 1:
        raise ValidationError("need at least one count")
    return float(c.mean())


def gamma_mixing_density(lam, params):
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise DomainError("gamma mixing density is defined for lambda > 0")
    s, tau = params.s, params.tau
    return np.exp((s - 1.0) * np.log(lam) - tau * lam + s * np.log(tau) - special.gammaln(s))


def gamma_quantile(prob, params):
    return special.gammaincinv(params.s, np.asarray(prob, dtype=float)) / params.tau


def integrate_against_gamma(g, params, *, abs_tol=1e-12, rel_tol=1e-10, tail=1e-10):
    """Return ``(value, error, tail_mass)`` of ``int g(lam) f_Lambda(lam) dlam``.

    The range is cut at the ``1 - tail`` quantile. For ``s < 1`` the density
    is unbounded at zero and the substitution ``lam = u**(1/s)`` turns the
    weight into the smooth ``exp(-tau u^(1/s)) tau^s / Gamma(s+1)``.
    """
    s, tau = params.s, params.tau
    upper = float(special.gammainccinv(s, tail) / tau)
    breaks = gamma_quantile(_BREAK_PROBS, params)
    breaks = breaks[(breaks > 0) & (breaks < upper)]

    def attach(gv, w):
        return gv * w.reshape((-1,) + (1,) * (gv.ndim - 1))

    if s < 1.0:
        log_norm = s * np.log(tau) - special.gammaln(s + 1.0)

        def integrand(u):
            lam = u ** (1.0 / s)
            gv = np.asarray(g(lam), dtype=float)
            return attach(gv, np.exp(log_norm - tau * lam))

        val, err = integrate(integrand, 0.0, upper ** s, points=breaks ** s,
                             abs_tol=abs_tol, rel_tol=rel_tol)
    else:
        def integrand(lam):
            gv = np.asarray(g(lam), dtype=float)
            return attach(gv, gamma_mixing_density(lam, params))

        val, err = integrate(integrand, 0.0, upper, points=breaks,
                             abs_tol=abs_tol, rel_tol=rel_tol)
    return val, err, tail


def gamma_poisson_equals_nb(k, params, *, abs_tol=1e-13):
    """Mixture ``int Poisson(k; lam) f_Lambda(lam) dlam`` next to ``nb_pmf(k)``."""
    k = int(k)
    if k < 0:
        raise DomainError("k must be non-negative")

    def poisson(lam):
        return np.exp(special.xlogy(k, lam) - lam - special.gammaln(k + 1.0))

    lhs, err, tail = integrate_against_gamma(poisson, params, abs_tol=abs_tol, rel_tol=1e-12)
    return float(lhs), float(nb_pmf(k, params))


def to_daily(params, periods=TRADING_DAYS):
    """Scale an annual fit to one trading day: shape divided by 252, rate kept."""
    if params.horizon != "annual":
        raise ValidationError("parameters are already daily")
    return replace(params, gamma=params.gamma / periods, horizon="daily")


def fit_jump_size(outlier_returns):
    """Mean jump multiple ``m`` and log-jump sd ``nu`` from outlier log returns."""
    r = np.asarray(outlier_returns, dtype=float)
    if r.size < 2:
        raise ValidationError(f"need at least two outliers to fit jump sizes, got {r.size}")
    m = float(np.mean(np.exp(r)))
    nu = float(np.std(r, ddof=1))
    return m, nu

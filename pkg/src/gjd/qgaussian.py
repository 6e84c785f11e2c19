"""Tsallis q-Gaussian family and its variance-mixture representation.

For ``1 < q < 3`` the q-Gaussian

    G_q(beta; z) = sqrt(beta) / C_q * e_q(-beta z^2)

is a scale mixture of centred normals. The precision ``1/v^2`` of the mixed
normal is gamma distributed with shape ``(3-q) / (2(q-1))`` and scale
``2(q-1) beta``, which gives both the closed-form mixing density of the
volatility ``v`` and the chi-square sampler used by :func:`sample`.
"""

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import DomainError, ValidationError
from .quadrature import integrate_to_inf

Q_MAX = 5.0 / 3.0
Q_GRID = np.round(np.arange(1.01, 1.6601, 0.01), 10)

# probabilities used to place quadrature breakpoints at mixing-law quantiles
_BREAK_PROBS = np.array([1e-12, 1e-8, 1e-5, 1e-3, 0.01, 0.05, 0.2, 0.5, 0.8,
                         0.95, 0.99, 0.999, 1 - 1e-5, 1 - 1e-8])


@dataclass(frozen=True)
class QGaussianParams:
    """Shape ``q`` and scale ``beta`` (units 1/return^2) of a q-Gaussian."""

    q: float
    beta: float

    def __post_init__(self):
        if not (1.0 <= self.q < Q_MAX):
            raise DomainError(f"q must lie in [1, 5/3), got {self.q}")
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise DomainError(f"beta must be positive and finite, got {self.beta}")

    @property
    def variance(self):
        return 1.0 / (self.beta * (5.0 - 3.0 * self.q))

    @property
    def sd(self):
        return float(np.sqrt(self.variance))

    @property
    def is_normal(self):
        return self.q == 1.0


def q_exp(x, q):
    """q-exponential ``[1 + (1-q) x]_+ ** (1/(1-q))``; zero where the bracket is non-positive."""
    x = np.asarray(x, dtype=float)
    if q == 1:
        return np.exp(x)
    base = 1.0 + (1.0 - q) * x
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp(np.log1p((1.0 - q) * x) / (1.0 - q))
    out = np.where(base > 0, out, 0.0)
    return out if out.ndim else float(out)


def q_log(x, q):
    """q-logarithm ``(x**(1-q) - 1) / (1-q)``, the inverse of :func:`q_exp`."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("q_log is defined for positive arguments only")
    if q == 1:
        out = np.log(x)
    else:
        out = np.expm1((1.0 - q) * np.log(x)) / (1.0 - q)
    return out if out.ndim else float(out)


def norming_constant(q):
    """C_q such that ``sqrt(beta)/C_q * e_q(-beta z^2)`` integrates to one."""
    if q == 1:
        return float(np.sqrt(np.pi))
    if not (1.0 < q < 3.0):
        raise DomainError(f"norming constant needs 1 < q < 3, got {q}")
    log_c = (0.5 * np.log(np.pi) + special.gammaln((3.0 - q) / (2.0 * (q - 1.0)))
             - 0.5 * np.log(q - 1.0) - special.gammaln(1.0 / (q - 1.0)))
    return float(np.exp(log_c))


def density(z, params):
    z = np.asarray(z, dtype=float)
    q, beta = params.q, params.beta
    return np.sqrt(beta) / norming_constant(q) * q_exp(-beta * z * z, q)


def _t_form(params):
    # Student-t degrees of freedom and scale of the same law
    df = (3.0 - params.q) / (params.q - 1.0)
    scale = 1.0 / np.sqrt((3.0 - params.q) * params.beta)
    return df, scale


def cdf(z, params):
    """Distribution function, via the Student-t reparameterization."""
    z = np.asarray(z, dtype=float)
    if params.is_normal:
        return special.ndtr(z * np.sqrt(2.0 * params.beta))
    df, scale = _t_form(params)
    return special.stdtr(df, z / scale)


def beta_from_variance(variance, q):
    if q >= Q_MAX:
        raise DomainError(f"the variance relation requires q < 5/3, got {q}")
    if not variance > 0:
        raise DomainError(f"variance must be positive, got {variance}")
    return 1.0 / (variance * (5.0 - 3.0 * q))


def variance_from_beta(beta, q):
    if q >= Q_MAX:
        raise DomainError(f"the variance relation requires q < 5/3, got {q}")
    return 1.0 / (beta * (5.0 - 3.0 * q))


# --- mixing density of the volatility ------------------------------------

def _precision_shape(q):
    return (3.0 - q) / (2.0 * (q - 1.0))


def _require_mixture(params):
    if params.is_normal:
        raise DomainError("the mixing density needs q > 1 (q = 1 is a point mass)")


def log_mixing_density(v, params):
    _require_mixture(params)
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0):
        raise DomainError("mixing density is defined for v > 0")
    q, beta = params.q, params.beta
    shape = _precision_shape(q)
    log_cinv = special.gammaln(shape) - np.log(2.0) + shape * np.log(2.0 * (q - 1.0))
    return (-log_cinv + (q - 3.0) / (2.0 * (q - 1.0)) * np.log(beta)
            - 1.0 / (2.0 * (q - 1.0) * beta * v * v)
            - 2.0 / (q - 1.0) * np.log(v))


def mixing_density(v, params):
    """Density of the normal's standard deviation ``v`` in the mixture."""
    return np.exp(log_mixing_density(v, params))


def mixing_mode(params):
    """Location of the maximum of the mixing density, ``1/sqrt(2 beta)``."""
    return 1.0 / np.sqrt(2.0 * params.beta)


def mixing_quantile(prob, params):
    _require_mixture(params)
    c = 1.0 / (2.0 * (params.q - 1.0) * params.beta)
    u = special.gammainccinv(_precision_shape(params.q), np.asarray(prob, dtype=float))
    return np.sqrt(c / u)


def integrate_mixture(g, params, *, abs_tol=1e-9, rel_tol=1e-8):
    """Return ``(value, error)`` of ``int_0^inf g(v) f_V(v) dv``.

    ``g`` takes an array of volatilities of shape ``(n,)`` and returns shape
    ``(n, ...)``. For ``q = 1`` the mixing law is a point mass at
    ``1/sqrt(2 beta)`` and ``g`` is evaluated once.
    """
    if params.is_normal:
        val = np.asarray(g(np.array([mixing_mode(params)])), dtype=float)[0]
        return val, np.zeros_like(val)

    def weighted(v):
        gv = np.asarray(g(v), dtype=float)
        w = mixing_density(v, params)
        return gv * w.reshape((-1,) + (1,) * (gv.ndim - 1))

    points = mixing_quantile(_BREAK_PROBS, params)
    return integrate_to_inf(weighted, 0.0, scale=mixing_mode(params), points=points,
                            abs_tol=abs_tol, rel_tol=rel_tol)


def sample(params, n, seed):
    """Draw ``n`` q-Gaussian variates as ``Z / a`` with ``a^2 = (q-1) beta chi2_df``."""
    if int(n) != n or n < 1:
        raise ValidationError(f"sample size must be a positive integer, got {n}")
    rng = np.random.default_rng(seed)
    if params.is_normal:
        return rng.normal(0.0, np.sqrt(0.5 / params.beta), size=n)
    df = (3.0 - params.q) / (params.q - 1.0)
    a2 = (params.q - 1.0) * params.beta * rng.chisquare(df, size=n)
    return rng.standard_normal(n) / np.sqrt(a2)


# --- estimation ------------------------------------------------------------

@dataclass(frozen=True)
class QFit:
    params: QGaussianParams
    method: str
    n_used: int
    n_zeros_dropped: int
    score: float
    beta_variance: float

    def to_dict(self):
        return {
            "q": self.params.q,
            "beta": self.params.beta,
            "variance": self.params.variance,
            "method": self.method,
            "n_used": self.n_used,
            "n_zeros_dropped": self.n_zeros_dropped,
        }


def _prepare(sample_):
    x = np.asarray(sample_, dtype=float)
    nonzero = x[x != 0.0]
    dropped = x.size - nonzero.size
    if nonzero.size < 100:
        raise ValidationError(f"q estimation needs at least 100 non-zero returns, got {nonzero.size}")
    centred = nonzero - nonzero.mean()
    var = centred.var(ddof=1)
    if not var > 0:
        raise ValidationError("sample has zero variance")
    return centred, dropped, var


_OBJECTIVES = {
    "abs_cdf": lambda d: np.abs(d).sum(),
    "sq_cdf": lambda d: np.square(d).sum(),
}


def estimate_q_cdf(sample_, *, objective="abs_cdf", grid=Q_GRID):
    """Fit q by matching the model CDF to the empirical CDF.

    Zero returns are dropped and the rest centred. For every candidate q,
    beta follows from the sample variance; the discrepancy between model and
    empirical CDF at the sample points is minimized over a grid and then
    refined by a bounded scalar search.
    """
    if objective not in _OBJECTIVES:
        raise ValidationError(f"unknown objective {objective!r}")
    x, dropped, var = _prepare(sample_)
    xs = np.sort(x)
    n = xs.size
    ecdf = (np.arange(n) + 0.5) / n
    reduce = _OBJECTIVES[objective]

    def loss(q):
        params = QGaussianParams(q, beta_from_variance(var, q))
        return reduce(cdf(xs, params) - ecdf)

    losses = np.array([loss(q) for q in grid])
    i = int(np.argmin(losses))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(loss, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-5})
    q_hat, best = (res.x, res.fun) if res.fun < losses[i] else (grid[i], losses[i])
    q_hat = float(q_hat)
    beta = beta_from_variance(var, q_hat)
    return QFit(QGaussianParams(q_hat, beta), f"cdf:{objective}", n, dropped,
                float(best), beta)


def _ferri_table(x, min_count):
    """Histogram on Freedman-Diaconis bins centred at zero.

    Returns bin centres, density ratios to the central bin, and counts for the
    contiguous run of bins around zero holding at least ``min_count`` points;
    isolated populated bins further out are dropped because only their upward
    fluctuations clear the threshold.
    """
    width = 2.0 * (np.percentile(x, 75) - np.percentile(x, 25)) * x.size ** (-1.0 / 3.0)
    if not width > 0:
        raise ValidationError("Freedman-Diaconis bin width is zero")
    half = int(np.ceil(np.max(np.abs(x)) / width - 0.5)) + 1
    edges = (np.arange(-half, half + 2) - 0.5) * width
    counts, _ = np.histogram(x, bins=edges)
    centres = 0.5 * (edges[:-1] + edges[1:])
    if counts[half] < min_count:
        raise ValidationError("central histogram bin is empty; cannot normalise by g(0)")
    sparse = counts < min_count
    left = half
    while left > 0 and not sparse[left - 1]:
        left -= 1
    right = half
    while right < counts.size - 1 and not sparse[right + 1]:
        right += 1
    keep = slice(left, right + 1)
    return centres[keep], counts[keep] / counts[half], counts[keep].astype(float)


def _weighted_corr(x, y, w):
    w = w / w.sum()
    dx = x - np.sum(w * x)
    dy = y - np.sum(w * y)
    return np.sum(w * dx * dy) / np.sqrt(np.sum(w * dx * dx) * np.sum(w * dy * dy))


def estimate_q_ferri(sample_, *, min_count=5, grid=Q_GRID):
    """Fit q by linearizing the histogram density with the q-logarithm.

    For the right q, ``q_log(g(z)/g(0))`` is linear in ``z^2`` (slope
    ``-beta``); the q whose transform correlates most strongly with ``z^2``
    wins. The correlation is weighted by the inverse Poisson variance of each
    transformed bin, ``count * ratio**(2(q-1))``.
    """
    x, dropped, var = _prepare(sample_)
    z, ratio, counts = _ferri_table(x, min_count)
    if z.size < 3:
        raise ValidationError("too few populated histogram bins for the q-log regression")
    z2 = z * z

    def weights(q):
        return counts * ratio ** (2.0 * (q - 1.0))

    def corr(q):
        return abs(_weighted_corr(z2, q_log(ratio, q), weights(q)))

    scores = np.array([corr(q) for q in grid])
    i = int(np.argmax(scores))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda q: -corr(q), bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-5})
    q_hat, best = (res.x, -res.fun) if -res.fun > scores[i] else (grid[i], scores[i])
    q_hat = float(q_hat)
    slope = np.polyfit(z2, q_log(ratio, q_hat), 1, w=np.sqrt(weights(q_hat)))[0]
    beta = -slope
    if not beta > 0:
        raise ValidationError("fitted q-log slope is not negative; sample is not bell-shaped")
    return QFit(QGaussianParams(q_hat, beta), "ferri", x.size, dropped, float(best),
                beta_from_variance(var, q_hat))


def estimate_q(sample_, method="cdf", **kwargs):
    if method == "cdf":
        return estimate_q_cdf(sample_, **kwargs)
    if method == "ferri":
        return estimate_q_ferri(sample_, **kwargs)
    raise ValidationError(f"unknown q-estimation method {method!r}")

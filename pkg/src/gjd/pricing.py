"""European call prices under Black-Scholes, Merton, variance-mixture and the
generalized jump-diffusion (GJD) model, plus implied volatility inversion.

GJD price:

    P = int f_Lambda(lam) sum_k Pois(k; m lam T) P_VMBM(S, K, r_k, T) dlam
    P_VMBM = int P_BS(S, K, v_k, r_k, T) f_V(v) dv
    v_k = sqrt(v^2 + k nu^2 / T),  r_k = r - lam (m - 1) + k log(m) / T

All model parameters are per trading day, so ``T`` and ``r`` must be too.
"""

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special, stats

from .errors import ConvergenceError, DomainError, ValidationError
from .jump_model import JumpParams, integrate_against_gamma
from .qgaussian import QGaussianParams, integrate_mixture

TRADING_DAYS = 252


@dataclass(frozen=True)
class MarketInputs:
    """Spot, strike, rate and maturity measured in one time unit."""

    S: float
    K: float
    r: float
    T: float
    unit: str = "day"

    def __post_init__(self):
        if not (self.S > 0 and self.K > 0):
            raise DomainError("spot and strike must be positive")
        if not self.T >= 0:
            raise DomainError("maturity must be non-negative")
        if self.unit not in ("day", "year"):
            raise DomainError(f"unit must be 'day' or 'year', got {self.unit!r}")

    def in_trading_days(self):
        if self.unit == "day":
            return self
        return MarketInputs(self.S, self.K, self.r / TRADING_DAYS, self.T * TRADING_DAYS, "day")


@dataclass(frozen=True)
class GJDModel:
    diffusion: QGaussianParams
    jumps: JumpParams

    def __post_init__(self):
        if self.jumps.horizon != "daily":
            raise ValidationError("GJD jump parameters must be on the daily horizon")


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    series_tol: float = 1e-12
    max_k: int = 20000
    lambda_tail: float = 1e-10

    def __post_init__(self):
        if min(self.abs_tol, self.rel_tol, self.series_tol, self.lambda_tail) <= 0:
            raise ValidationError("tolerances must be positive")
        if self.max_k < 1:
            raise ValidationError("max_k must be at least 1")

    def halved(self):
        return QuadratureConfig(self.abs_tol / 2, self.rel_tol / 2, self.series_tol / 2,
                                self.max_k, self.lambda_tail / 2)


def _check_nonneg(**kw):
    for name, val in kw.items():
        if np.any(np.asarray(val) < 0):
            raise DomainError(f"{name} must be non-negative")


def bs_call(S, K, v, r, T):
    """Black-Scholes call; ``v`` is volatility per square-root time unit.

    Broadcasts over array arguments. With zero total volatility the price is
    the discounted forward payoff ``max(S - K exp(-rT), 0)``.
    """
    _check_nonneg(S=S, K=K, v=v, T=T)
    S, K, v, r, T = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (S, K, v, r, T)))
    sd = v * np.sqrt(T)
    disc_k = K * np.exp(-r * T)
    flat = sd <= 0
    safe = np.where(flat, 1.0, sd)
    with np.errstate(divide="ignore"):
        d1 = (np.log(S / K) + (r + 0.5 * v * v) * T) / safe
    d2 = d1 - safe
    price = S * special.ndtr(d1) - disc_k * special.ndtr(d2)
    price = np.where(flat, np.maximum(S - disc_k, 0.0), np.maximum(price, 0.0))
    return price if price.ndim else float(price)


def _poisson_window(mean, tol, max_k):
    """Smallest k-range holding all but ``tol`` of Poisson(mean) mass."""
    mean = np.atleast_1d(mean)
    lo = np.where(mean > 0, stats.poisson.ppf(tol / 2, mean), 0).astype(int)
    hi = np.where(mean > 0, stats.poisson.isf(tol / 2, mean), 0).astype(int)
    lo = np.maximum(lo - 1, 0)
    if np.any(hi - lo + 1 > max_k):
        worst = float(mean[np.argmax(hi - lo)])
        raise ConvergenceError(
            f"Poisson series needs {int(np.max(hi - lo + 1))} terms at mean {worst:.4g}, "
            f"above max_k={max_k}", bound=tol)
    return lo, hi


def _poisson_weights(ks, mean):
    # mean broadcast against ks; a zero mean puts all weight on k = 0
    return np.exp(special.xlogy(ks, mean) - mean - special.gammaln(ks + 1.0))


def merton_call(S, K, v, r, T, m, nu, lam, *, series_tol=1e-12, max_k=20000):
    """Merton jump-diffusion call as the Poisson(m lam T)-weighted BS series."""
    _check_nonneg(S=S, K=K, v=v, T=T, lam=lam, nu=nu)
    if T == 0 or lam == 0:
        return bs_call(S, K, v, r, T)
    mean = m * lam * T
    lo, hi = _poisson_window(mean, series_tol, max_k)
    ks = np.arange(lo[0], hi[0] + 1, dtype=float)
    w = _poisson_weights(ks, mean)
    vk = np.sqrt(v * v + ks * nu * nu / T)
    rk = r - lam * (m - 1.0) + ks * np.log(m) / T
    return float(np.sum(w * bs_call(S, K, vk, rk, T)))


def vmbm_call(S, K, r_eff, T, diffusion, k=0, nu=0.0, *, abs_tol=1e-10, rel_tol=1e-10,
              return_error=False):
    """Call price with volatility mixed over the q-Gaussian law, optionally k-jump shifted."""
    if T == 0:
        price, err = bs_call(S, K, 0.0, r_eff, 0.0), 0.0
    else:
        shift = k * nu * nu / T

        def g(v):
            return bs_call(S, K, np.sqrt(v * v + shift), r_eff, T)

        price, err = integrate_mixture(g, diffusion, abs_tol=abs_tol, rel_tol=rel_tol)
        price, err = float(price), float(err)
    return (price, err) if return_error else price


def _group_windows(lo, hi, max_cells):
    """Split node indices into runs whose union k-window stays compact.

    A run is also closed once ``nodes * window`` would exceed ``max_cells``.
    """
    order = np.argsort(lo + hi, kind="stable")
    groups, cur = [], [order[0]]
    glo, ghi = lo[order[0]], hi[order[0]]
    widest = hi[order[0]] - lo[order[0]] + 1
    for i in order[1:]:
        nlo, nhi = min(glo, lo[i]), max(ghi, hi[i])
        nwidest = max(widest, hi[i] - lo[i] + 1)
        span = nhi - nlo + 1
        if span <= 1.5 * nwidest + 16 and (len(cur) + 1) * span <= max_cells:
            cur.append(i)
            glo, ghi, widest = nlo, nhi, nwidest
        else:
            groups.append((np.array(cur), glo, ghi))
            cur, glo, ghi, widest = [i], lo[i], hi[i], hi[i] - lo[i] + 1
    groups.append((np.array(cur), glo, ghi))
    return groups


# element budget for one broadcast block of Black-Scholes evaluations
_BLOCK = 1 << 20


def gjd_prices(S, strikes, r, T, model, cfg=None):
    """GJD call prices for an array of strikes.

    Returns ``(prices, error_bounds)``; the bound adds the quadrature error
    estimates of both integrals to the truncated mass of the intensity law
    and of the Poisson series (each times the price ceiling ``S``).
    """
    cfg = cfg or QuadratureConfig()
    strikes = np.atleast_1d(np.asarray(strikes, dtype=float))
    if not S > 0 or np.any(strikes <= 0):
        raise DomainError("spot and strikes must be positive")
    if T < 0:
        raise DomainError("maturity must be non-negative")
    if T == 0:
        return np.maximum(S - strikes, 0.0), np.zeros_like(strikes)
    q_params, jumps = model.diffusion, model.jumps
    m, nu = jumps.m, jumps.nu
    nk = strikes.size
    inner_abs = cfg.abs_tol / 4
    inner_rel = cfg.rel_tol / 4

    def conditional(lams):
        # price given the intensity, with the inner error bound appended
        lams = np.asarray(lams, dtype=float)
        out = np.empty((lams.size, 2 * nk))
        means = m * lams * T
        lo, hi = _poisson_window(means, cfg.series_tol, cfg.max_k)
        for idx, glo, ghi in _group_windows(lo, hi, max(_BLOCK // (64 * nk), 1)):
            lam = lams[idx]
            ks = np.arange(glo, ghi + 1, dtype=float)
            w = _poisson_weights(ks[None, :], means[idx][:, None])
            rk = r - lam[:, None] * (m - 1.0) + ks[None, :] * np.log(m) / T
            shift = ks * nu * nu / T

            def g(v):
                res = np.empty((v.size, lam.size, nk))
                step = max(_BLOCK // (w.size * nk), 1)
                for a in range(0, v.size, step):
                    vv = v[a:a + step]
                    vk = np.sqrt(vv[:, None] * vv[:, None] + shift[None, :])
                    bs = bs_call(S, strikes[None, None, None, :], vk[:, None, :, None],
                                 rk[None, :, :, None], T)
                    res[a:a + step] = np.einsum("lk,nlkj->nlj", w, bs)
                return res

            val, err = integrate_mixture(g, q_params, abs_tol=inner_abs, rel_tol=inner_rel)
            out[idx, :nk] = val
            out[idx, nk:] = err
        return out

    val, err, tail = integrate_against_gamma(
        conditional, jumps, abs_tol=cfg.abs_tol / 2, rel_tol=cfg.rel_tol / 2,
        tail=cfg.lambda_tail)
    prices = val[:nk]
    bound = err[:nk] + val[nk:] + (tail + cfg.series_tol) * S
    return prices, bound


def gjd_call(inputs, model, cfg=None, *, return_error=False):
    """Generalized jump-diffusion call price for one strike."""
    d = inputs.in_trading_days()
    prices, bound = gjd_prices(d.S, [d.K], d.r, d.T, model, cfg)
    price, err = float(prices[0]), float(bound[0])
    return (price, err) if return_error else price


def no_arbitrage_band(S, K, r, T):
    return max(S - K * np.exp(-r * T), 0.0), float(S)


def implied_vol(price, inputs):
    """Black-Scholes volatility reproducing ``price`` (per square-root time unit of ``inputs``)."""
    S, K, r, T = inputs.S, inputs.K, inputs.r, inputs.T
    lower, upper = no_arbitrage_band(S, K, r, T)
    if T <= 0:
        raise ValidationError("implied volatility is undefined at zero maturity")
    if not price > lower:
        raise ValidationError(
            f"price {price:.10g} is at or below the lower no-arbitrage bound {lower:.10g}")
    if not price < upper:
        raise ValidationError(
            f"price {price:.10g} is at or above the upper no-arbitrage bound {upper:.10g}")

    def f(v):
        return bs_call(S, K, v, r, T) - price

    hi = 1.0 / np.sqrt(T)
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e6:
            raise ConvergenceError("could not bracket the implied volatility")
    vol = optimize.brentq(f, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(f(vol)) > 1e-10 * S:
        raise ConvergenceError(f"implied volatility residual {abs(f(vol)):.3g} too large")
    return float(vol)


@dataclass(frozen=True)
class SmilePoint:
    strike: float
    price: float
    implied_vol: float
    error: float


def smile(S, r, T, strikes, model, cfg=None, unit="day"):
    """GJD prices and implied volatilities across strikes (trading-day units by default)."""
    strikes = np.asarray(strikes, dtype=float)
    if np.any(np.diff(strikes) <= 0):
        raise ValidationError("strikes must be strictly increasing")
    base = MarketInputs(S, float(strikes[0]), r, T, unit).in_trading_days()
    prices, bounds = gjd_prices(base.S, strikes, base.r, base.T, model, cfg)
    out = []
    for k, p, e in zip(strikes, prices, bounds):
        try:
            iv = implied_vol(float(p), MarketInputs(base.S, float(k), base.r, base.T))
        except (ValidationError, ConvergenceError) as exc:
            raise type(exc)(f"strike {k:g}: {exc}") from exc
        out.append(SmilePoint(float(k), float(p), iv, float(e)))
    return out

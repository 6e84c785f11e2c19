"""Synthetic data from the model: terminal prices for Monte-Carlo checks and
annual-block return histories for the calibration pipeline.

Everything here draws from numpy generators directly and never touches the
quadrature code, so it serves as an independent oracle for the pricer.
"""

import datetime as _dt

import numpy as np

from .market_data import PriceSeries
from .qgaussian import mixing_quantile


def _draw_vols(diffusion, n, rng):
    if diffusion.is_normal:
        return np.full(n, np.sqrt(0.5 / diffusion.beta))
    q, beta = diffusion.q, diffusion.beta
    df = (3.0 - q) / (q - 1.0)
    return 1.0 / np.sqrt((q - 1.0) * beta * rng.chisquare(df, size=n))


def terminal_log_prices(S, r, T, model, n, seed):
    """Sample ``log S_T`` under the risk-neutral GJD dynamics.

    Per path: a volatility from the mixing law, an intensity from the gamma
    law, a Poisson jump count, lognormal jumps with mean ``m``, and a drift
    ``r - lam (m - 1)`` that makes the price a martingale given the intensity.
    """
    rng = np.random.default_rng(seed)
    jumps = model.jumps
    v = _draw_vols(model.diffusion, n, rng)
    lam = rng.gamma(jumps.s, 1.0 / jumps.tau, size=n)
    counts = rng.poisson(lam * T)
    jump_log = (counts * (np.log(jumps.m) - 0.5 * jumps.nu ** 2)
                + jumps.nu * np.sqrt(counts) * rng.standard_normal(n))
    drift = (r - lam * (jumps.m - 1.0) - 0.5 * v * v) * T
    return np.log(S) + drift + v * np.sqrt(T) * rng.standard_normal(n) + jump_log


def mc_call(S, K, r, T, model, n=1_000_000, seed=0, chunk=250_000):
    """Monte-Carlo call price and its standard error."""
    total, total_sq, done = 0.0, 0.0, 0
    ss = np.random.SeedSequence(seed)
    for child in ss.spawn(int(np.ceil(n / chunk))):
        m = min(chunk, n - done)
        payoff = np.exp(-r * T) * np.maximum(np.exp(terminal_log_prices(S, r, T, model, m, child)) - K, 0.0)
        total += payoff.sum()
        total_sq += np.square(payoff).sum()
        done += m
    mean = total / n
    var = (total_sq / n - mean * mean) * n / (n - 1)
    return mean, float(np.sqrt(max(var, 0.0) / n))


def annual_block_returns(diffusion, annual_jumps, n_blocks, seed, *, block_length=252,
                         regime_length=None, drift=0.0, stratified=False):
    """Daily log returns built block by block.

    Each volatility regime (default: the whole block) draws one standard
    deviation from the mixing law; each block draws an NB jump count, places
    the jumps on distinct random days and adds lognormal jump log-sizes.

    With ``stratified=True`` the regime volatilities are the mixing-law
    quantiles at ``(i + 1/2) / n`` in random order instead of independent
    draws, so short histories still span the whole mixing law.
    """
    rng = np.random.default_rng(seed)
    regime_length = regime_length or block_length
    starts = range(0, block_length, regime_length)
    n_regimes = n_blocks * len(starts)
    if stratified and not diffusion.is_normal:
        vols = mixing_quantile((np.arange(n_regimes) + 0.5) / n_regimes, diffusion)
        vols = rng.permutation(vols)
    else:
        vols = _draw_vols(diffusion, n_regimes, rng)
    vols = iter(vols)
    out = np.empty(n_blocks * block_length)
    for b in range(n_blocks):
        block = np.empty(block_length)
        for a in starts:
            sl = slice(a, min(a + regime_length, block_length))
            block[sl] = drift + next(vols) * rng.standard_normal(sl.stop - sl.start)
        lam = rng.gamma(annual_jumps.s, 1.0 / annual_jumps.tau)
        count = min(rng.poisson(lam), block_length)
        days = rng.choice(block_length, size=count, replace=False)
        block[days] += (np.log(annual_jumps.m) - 0.5 * annual_jumps.nu ** 2
                        + annual_jumps.nu * rng.standard_normal(count))
        out[b * block_length:(b + 1) * block_length] = block
    return out


def prices_from_returns(returns, start=_dt.date(2000, 1, 3), close0=100.0):
    """Close-price series on consecutive business days from log returns."""
    closes = close0 * np.exp(np.concatenate([[0.0], np.cumsum(returns)]))
    days = np.busday_offset(np.datetime64(start), np.arange(closes.size), roll="forward")
    dates = [d.item() for d in days]
    return PriceSeries(tuple(zip(dates, closes.tolist())))

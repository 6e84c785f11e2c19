import numpy as np
import pytest

from gjd import simulate
from gjd.jump_model import JumpParams
from gjd.qgaussian import QGaussianParams, mixing_quantile
from gjd.pricing import GJDModel


def test_terminal_prices_martingale_given_no_jumps():
    model = GJDModel(QGaussianParams(1.4, 14582.54),
                     JumpParams.from_gamma_law(1e-9, 0.54, m=0.99, nu=0.03, horizon="daily"))
    x = simulate.terminal_log_prices(100.0, 0.0, 20.0, model, 10 ** 6, seed=0)
    e = np.exp(x)
    assert abs(e.mean() - 100.0) < 4 * e.std() / np.sqrt(e.size)


def test_mc_call_reproducible(spy_model):
    a = simulate.mc_call(492.44, 492.0, 0.0, 1.0, spy_model, n=10 ** 5, seed=3)
    b = simulate.mc_call(492.44, 492.0, 0.0, 1.0, spy_model, n=10 ** 5, seed=3)
    assert a == b
    assert a[1] > 0


def test_block_returns_shape_and_stratification():
    d = QGaussianParams(1.43, 5000.0)
    j = JumpParams(3.4, 0.244, m=0.9963, nu=0.0369)
    r = simulate.annual_block_returns(d, j, 8, seed=1, stratified=True)
    assert r.shape == (8 * 252,)
    sds = np.sort([np.std(b) for b in r.reshape(8, 252)])
    expected = mixing_quantile((np.arange(8) + 0.5) / 8, d)
    assert np.corrcoef(sds, expected)[0, 1] > 0.8


def test_prices_on_business_days():
    p = simulate.prices_from_returns(np.zeros(10))
    assert len(p) == 11
    assert all(d.weekday() < 5 for d in p.dates)
    assert p.closes == pytest.approx(np.full(11, 100.0))

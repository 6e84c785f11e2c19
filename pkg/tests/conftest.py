import pytest

from gjd import paramdoc
from gjd.jump_model import JumpParams
from gjd.pricing import GJDModel
from gjd.qgaussian import QGaussianParams

SPOT = 492.44
R_DAILY = 0.04 / 365


@pytest.fixture(scope="session")
def spy_model():
    t = paramdoc.SPY_REFERENCE
    return GJDModel(QGaussianParams(t["q"], t["beta"]),
                    JumpParams.from_gamma_law(t["s_daily"], t["tau"], m=t["m"], nu=t["nu"],
                                              horizon="daily"))


@pytest.fixture(scope="session")
def sp_annual_jumps():
    return JumpParams(3.4, 0.244, m=0.9963, nu=0.0369)

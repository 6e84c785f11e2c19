"""Generalized jump-diffusion option pricing with q-Gaussian volatility mixing
and negative-binomial jump counts."""

from .errors import (ConvergenceError, DomainError, GJDError, OverdispersionError, ParseError,
                     StageError, ValidationError)
from .jump_model import JumpParams, fit_jump_size, fit_nb_mom, nb_pmf, to_daily
from .pricing import (GJDModel, MarketInputs, QuadratureConfig, bs_call, gjd_call, implied_vol,
                      merton_call, smile, vmbm_call)
from .qgaussian import QGaussianParams, estimate_q

__version__ = "0.1.0"

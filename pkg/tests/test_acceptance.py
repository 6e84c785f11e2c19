"""Acceptance criteria, one test each, run at their stated tolerances.

Every test prints a single ``[PASS]`` or ``[FAIL]`` line with the measured
numbers before asserting, so ``pytest -v`` output doubles as the report.
"""

import subprocess
import sys
import time
from pathlib import Path

import mpmath
import numpy as np
import pytest

from gjd import jump_model as jm
from gjd import paramdoc, pricing as pr, qgaussian as qg, robust_stats as rs, simulate
from gjd.jump_model import JumpParams
from gjd.pricing import GJDModel, MarketInputs
from gjd.qgaussian import QGaussianParams

S = 492.44
R = 0.04 / 365
SP_VARIANCE = 8.5719e-5  # daily variance of the SPY reference calibration


def verdict(capsys, label, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    assert ok, detail


def spy_reference():
    return paramdoc.model_from(paramdoc.SPY_REFERENCE)


def daily_model(q, beta, s, tau, m, nu):
    return GJDModel(QGaussianParams(q, beta),
                    JumpParams.from_gamma_law(s, tau, m=m, nu=nu, horizon="daily"))


def test_c1_nb_arithmetic(capsys):
    t0 = time.perf_counter()
    n = 96
    half = np.sqrt(43.2 * (n - 1) / n)
    counts = np.repeat([10.5 - half, 10.5 + half], n // 2)  # mean 10.5, variance 43.2 exactly
    fit = jm.fit_nb_mom(counts)
    daily = jm.to_daily(fit)
    dt = time.perf_counter() - t0
    checks = {
        "p": (fit.p, 0.244, 0.001),
        "gamma": (fit.gamma, 3.4, 0.05),
        "tau": (fit.tau, 0.3227, 0.0005),
        "s_daily": (daily.s, 0.0135, 0.0002),
    }
    bad = [k for k, (got, want, tol) in checks.items() if abs(got - want) > tol]
    detail = ", ".join(f"{k}={got:.5g} (want {want}+-{tol})" for k, (got, want, tol) in checks.items())
    verdict(capsys, "C1 NB arithmetic", not bad and dt < 1.0,
            f"{detail}; off: {bad or 'none'}; {dt * 1e3:.1f} ms")


def test_c2_mixture_identity(capsys):
    t0 = time.perf_counter()
    z = np.array([0, 0.005, -0.005, 0.01, -0.01, 0.02, -0.02, 0.05, -0.05])
    worst = 0.0
    for q, beta in ((1.43, qg.beta_from_variance(SP_VARIANCE, 1.43)), (1.4, 14582.54)):
        p = QGaussianParams(q, beta)
        val, _ = qg.integrate_mixture(
            lambda v: np.exp(-0.5 * (z[None, :] / v[:, None]) ** 2) / (v[:, None] * np.sqrt(2 * np.pi)), p)
        worst = max(worst, float(np.max(np.abs(val - qg.density(z, p)))))
    dt = time.perf_counter() - t0
    verdict(capsys, "C2 mixture identity", worst < 1e-6 and dt < 1.0,
            f"sup error {worst:.3g} (< 1e-6), {dt:.2f} s (< 1 s)")


def test_c3_gamma_poisson_nb(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for params in (JumpParams(3.4, 0.244), JumpParams(0.0135, 0.244, horizon="daily")):
        for k in range(51):
            lhs, rhs = jm.gamma_poisson_equals_nb(k, params)
            worst = max(worst, abs(lhs - rhs))
    dt = time.perf_counter() - t0
    verdict(capsys, "C3 Gamma-Poisson = NB", worst < 1e-8 and dt < 1.0,
            f"max |diff| {worst:.3g} over k=0..50 (< 1e-8), {dt:.2f} s (< 1 s)")


def _bs_oracle(S_, K, v, r, T):
    with mpmath.workdps(50):
        S_, K, v, r, T = map(mpmath.mpf, (S_, K, v, r, T))
        sd = v * mpmath.sqrt(T)
        d1 = (mpmath.log(S_ / K) + (r + v * v / 2) * T) / sd
        N = lambda x: mpmath.erfc(-x / mpmath.sqrt(2)) / 2
        return float(S_ * N(d1) - K * mpmath.exp(-r * T) * N(d1 - sd))


def test_c4_reduction_chain(capsys):
    t0 = time.perf_counter()
    lam0, tau = 0.05, 1e6
    model = daily_model(1 + 1e-4, 14582.54, tau * lam0, tau, 0.9923, 0.03777)
    v0 = 1 / np.sqrt(2 * 14582.54)
    gm = 0.0
    for K in (470.0, 492.0, 510.0):
        a = pr.gjd_call(MarketInputs(S, K, R, 14.0), model)
        b = pr.merton_call(S, K, v0, R, 14.0, 0.9923, 0.03777, lam0)
        gm = max(gm, abs(a / b - 1))
    mb = 0.0
    rng = np.random.default_rng(0)
    bo = 0.0
    for _ in range(100):
        S_ = rng.uniform(10, 1000)
        K = S_ * rng.uniform(0.5, 1.5)
        v, r, T = rng.uniform(0.05, 0.8), rng.uniform(0, 0.1), rng.uniform(0.01, 3)
        mb = max(mb, abs(pr.merton_call(S_, K, v, r, T, 0.9, 0.2, 0.0) - pr.bs_call(S_, K, v, r, T)))
        bo = max(bo, abs(pr.bs_call(S_, K, v, r, T) - _bs_oracle(S_, K, v, r, T)))
    dt = time.perf_counter() - t0
    ok = gm < 1e-4 and mb <= 1e-12 and bo < 1e-8 and dt < 10
    verdict(capsys, "C4 reduction chain", ok,
            f"gjd/merton rel {gm:.2g} (< 1e-4), merton(lam=0)-bs {mb:.2g} (<= 1e-12), "
            f"bs-oracle {bo:.2g} (< 1e-8), {dt:.1f} s (< 10 s)")


MC_SETS = [
    ("spy T=14 K=492", lambda: spy_reference(), 14.0, 492.0),
    ("spy T=1 K=1.1S", lambda: spy_reference(), 1.0, 1.1 * S),
    ("S&P fit T=38 K=500", lambda: daily_model(1.43, qg.beta_from_variance(SP_VARIANCE, 1.43),
                                               3.4 / 252, 0.3227, 0.9963, 0.0369), 38.0, 500.0),
    ("light tails T=5 K=490", lambda: daily_model(1.2, 20000.0, 1.5, 20.0, 1.02, 0.02), 5.0, 490.0),
    ("heavy tails T=99 K=540", lambda: daily_model(1.6, 5e4, 0.01, 0.1, 0.95, 0.08), 99.0, 540.0),
]


@pytest.mark.slow
def test_c5_monte_carlo(capsys):
    t0 = time.perf_counter()
    parts, ok = [], True
    for i, (name, make, T, K) in enumerate(MC_SETS):
        model = make()
        price = pr.gjd_call(MarketInputs(S, K, R, T), model)
        mc, se = simulate.mc_call(S, K, R, T, model, n=10 ** 6, seed=100 + i)
        z = (price - mc) / se
        ok &= abs(z) < 3
        parts.append(f"{name} {z:+.2f} SE")
    dt = time.perf_counter() - t0
    verdict(capsys, "C5 Monte-Carlo oracle", ok, "; ".join(parts) + f"; {dt:.0f} s")


@pytest.mark.slow
def test_c6_smile_shape(capsys):
    model = spy_reference()
    strikes = S * np.linspace(0.9, 1.1, 21)
    sigma = model.diffusion.sd
    parts, ok = [], True
    for T in (1.0, 14.0, 99.0):
        prices, _ = pr.gjd_prices(S, strikes, R, T, model)
        iv = np.array([pr.implied_vol(p, MarketInputs(S, K, R, T)) for K, p in zip(strikes, prices)])
        i = int(np.argmin(iv))
        interior = 0 < i < len(iv) - 1
        d2 = np.diff(iv, 2)
        convex = bool(np.all(d2 >= -1e-9))
        bs = pr.bs_call(S, strikes, sigma, R, T)
        rel = float(np.max(np.abs(prices - bs) / bs))
        ok &= interior and convex and rel < 0.05
        parts.append(f"T={T:g}: min at K={strikes[i]:.1f} ({'interior' if interior else 'edge'}), "
                     f"convex={'yes' if convex else f'no ({int(np.sum(d2 < -1e-9))} neg 2nd diffs)'}, "
                     f"max |GJD-BS|/BS={rel:.3g}")
    verdict(capsys, "C6 smile shape", ok, "; ".join(parts))


def test_c7_estimator_recovery(capsys):
    t0 = time.perf_counter()
    p = QGaussianParams(1.43, qg.beta_from_variance(SP_VARIANCE, 1.43))
    x = qg.sample(p, 20000, seed=20)
    q_cdf = qg.estimate_q(x, "cdf").params.q
    q_ferri = qg.estimate_q(x, "ferri").params.q
    c = np.random.default_rng(21).negative_binomial(3.4, 0.244, size=10 ** 4)
    nb = jm.fit_nb_mom(c)
    dg, dp = abs(nb.gamma / 3.4 - 1), abs(nb.p / 0.244 - 1)
    dt = time.perf_counter() - t0
    ok = abs(q_cdf - 1.43) <= 0.05 and abs(q_ferri - 1.43) <= 0.05 and dg <= 0.03 and dp <= 0.03 and dt < 60
    verdict(capsys, "C7 estimator recovery", ok,
            f"q cdf {q_cdf:.4f}, q ferri {q_ferri:.4f} (1.43+-0.05); NB gamma {nb.gamma:.4f} "
            f"({dg:.1%}), p {nb.p:.4f} ({dp:.1%}) (<= 3%); {dt:.1f} s")


def test_c8_diagnostics_battery(capsys):
    """Averaged over ten 95-block histories so one lucky seed cannot decide the outcome."""
    t0 = time.perf_counter()
    d = QGaussianParams(1.43, qg.beta_from_variance(SP_VARIANCE, 1.43))
    j = JumpParams(3.4, 0.244, m=0.9963, nu=0.0369)
    fractions, tails, kurts = [], [], []
    for seed in range(10):
        r = simulate.annual_block_returns(d, j, 95, seed=seed)
        _, rows = rs.block_diagnostics(list(r.reshape(95, 252)))
        fractions.append(sum(row["n_outliers"] for row in rows) / r.size)
        tails.extend(row["tail_probability"] for row in rows)
        kurts.extend(row["kurtosis"] for row in rows)
    frac = float(np.mean(fractions))
    tail_share = float(np.mean(np.array(tails) < 0.01))
    kurt = float(np.mean(kurts))
    dt = time.perf_counter() - t0
    ok = 0.03 <= frac <= 0.07 and tail_share > 0.5 and kurt < 3 and dt < 60
    verdict(capsys, "C8 diagnostics battery", ok,
            f"outlier fraction {frac:.2%} (5+-2 pts; per history {min(fractions):.2%}..{max(fractions):.2%}), "
            f"tail prob < 0.01 in {tail_share:.1%} of blocks (> 50%), mean kurtosis {kurt:.3f} (< 3); {dt:.1f} s")


INVARIANT_TESTS = [
    "test_qgaussian.py::test_normalization_and_variance",
    "test_qgaussian.py::test_symmetry_and_monotone_tails",
    "test_qgaussian.py::test_mixture_reproduces_density",
    "test_qgaussian.py::test_q_log_q_exp_round_trip",
    "test_pricing.py::test_bs_monotone_and_bounded",
    "test_pricing.py::test_spy_bounds_and_monotonicity",
    "test_pricing.py::test_price_increases_with_spot_and_maturity",
    "test_pricing.py::test_implied_vol_round_trip",
    "test_pricing.py::test_halving_tolerance_within_bound",
    "test_market_data.py::test_round_trip",
    "test_market_data.py::test_blocking_is_a_partition",
    "test_robust_stats.py::test_split_is_a_partition",
    "test_jump_model.py::test_pmf_sums_to_one",
    "test_jump_model.py::test_log_concave_for_gamma_at_least_one",
]


@pytest.mark.slow
def test_c9_invariant_suites(capsys):
    here = Path(__file__).parent
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", "--hypothesis-seed=0",
         *[str(here / t) for t in INVARIANT_TESTS]],
        capture_output=True, text=True, cwd=here.parent)
    dt = time.perf_counter() - t0
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    verdict(capsys, "C9 invariant suites", proc.returncode == 0 and dt < 120,
            f"{len(INVARIANT_TESTS)} property tests with fixed seed: {tail}; {dt:.0f} s (< 120 s)")

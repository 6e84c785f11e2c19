import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special, stats

from gjd import robust_stats as rs
from gjd.errors import ValidationError


def test_constant_block_all_truncated():
    s = rs.iqr_split(np.zeros(252))
    assert s.truncated.size == 252
    assert s.outliers.size == 0


def test_hand_computed_fence():
    block = np.array(list(range(1, 12)) + [100.0])
    q1, q3 = 3.75, 9.25  # linear quartiles of 1..11, 100
    s = rs.iqr_split(block)
    assert s.fences == pytest.approx((q1 - 1.5 * (q3 - q1), q3 + 1.5 * (q3 - q1)))
    assert s.outliers.tolist() == [100.0]


@given(st.lists(st.floats(-1, 1), min_size=4, max_size=300))
def test_split_is_a_partition(values):
    s = rs.iqr_split(values)
    np.testing.assert_array_equal(np.sort(np.concatenate([s.truncated, s.outliers])),
                                  np.sort(values))
    low, high = s.fences
    assert np.all((s.truncated >= low) & (s.truncated <= high))


def test_original_fences_keep_truncated_set():
    x = np.random.default_rng(0).standard_t(3, 252)
    s = rs.iqr_split(x)
    low, high = s.fences
    assert np.all((s.truncated >= low) & (s.truncated <= high))


def test_kolmogorov_sf_matches_scipy():
    for x in (0.05, 0.3, 0.7, 0.99, 1.0, 1.36, 2.5):
        assert rs.kolmogorov_sf(x) == pytest.approx(special.kolmogorov(x), abs=1e-12)


def test_ks_on_quantile_sample():
    x = stats.norm.ppf((np.arange(1, 253) - 0.5) / 252)
    assert rs.ks_normal_test(x).ks_distance < 0.01


def test_ks_rejects_cauchy():
    x = np.random.default_rng(1).standard_cauchy(252)
    assert rs.ks_normal_test(x).p_value < 0.01


def test_ks_under_null():
    rng = np.random.default_rng(2)
    p = np.array([rs.ks_normal_test(rng.normal(size=252)).p_value for _ in range(500)])
    assert 0.0 <= np.mean(p < 0.1) <= 0.2


def test_ks_errors():
    with pytest.raises(ValidationError):
        rs.ks_normal_test(np.ones(20))
    with pytest.raises(ValidationError):
        rs.ks_normal_test([1.0, 2.0])


def test_moments():
    skew, kurt = rs.moment_diagnostics(np.repeat([-1.0, 1.0], 126))
    assert skew == pytest.approx(0.0, abs=1e-15)
    assert kurt == pytest.approx(1.0)
    _, kurt = rs.moment_diagnostics(np.random.default_rng(3).normal(size=10 ** 5))
    assert kurt == pytest.approx(3.0, abs=0.1)
    with pytest.raises(ValidationError):
        rs.moment_diagnostics(np.ones(10))


def test_ftest():
    assert rs.variance_ratio_ftest(1.0, 252, 1.0, 252) == pytest.approx(1.0, abs=1e-12)
    d = 251
    pdf = lambda f: stats.f.pdf(f, d, d)
    upper, _ = integrate.quad(pdf, 4.0, np.inf)
    assert rs.variance_ratio_ftest(2.0, 252, 1.0, 252) == pytest.approx(2 * upper, rel=1e-6)
    assert rs.variance_ratio_ftest(2.0, 252, 1.0, 252) < 0.01
    with pytest.raises(ValidationError):
        rs.variance_ratio_ftest(0.0, 252, 1.0, 252)


def test_pairwise_count():
    p = rs.pairwise_ftests(np.linspace(1, 2, 95), 252)
    assert p.size == 95 * 94 // 2 == 4465


def _split_with(mu, sd, k):
    x = stats.norm.ppf((np.arange(1, 1001) - 0.5) / 1000) * sd + mu
    x = (x - x.mean()) / x.std(ddof=1) * sd + mu
    return rs.TruncationSplit(x, np.array([]), (mu - k * sd, mu + k * sd))


def test_tail_probability_oracles():
    assert rs.fence_tail_probability(_split_with(0.1, 2.0, 10.0)) < 1e-20
    assert rs.fence_tail_probability(_split_with(0.1, 2.0, 1.0)) == pytest.approx(0.3173, abs=1e-4)


def test_tail_probability_decreases_with_multiplier():
    x = np.random.default_rng(4).standard_t(4, 252)
    probs = [rs.fence_tail_probability(rs.iqr_split(x, m)) for m in (1.0, 1.5, 2.0, 3.0)]
    assert all(a > b for a, b in zip(probs, probs[1:]))


def test_diagnostics_round_trip(tmp_path):
    blocks = [np.random.default_rng(i).normal(0, 0.01, 252) for i in range(3)]
    splits, rows = rs.block_diagnostics(blocks)
    assert [r["block_index"] for r in rows] == [0, 1, 2]
    path = tmp_path / "d.csv"
    rs.write_diagnostics(path, rows)
    assert path.read_text().splitlines()[0] == ",".join(rs.DIAGNOSTIC_COLUMNS)
    assert rs.read_diagnostics(path) == rows

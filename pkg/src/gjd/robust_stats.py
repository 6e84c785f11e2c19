"""IQR truncation of annual blocks and the per-block normality diagnostics."""

import csv
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ValidationError

QUARTILE_METHOD = "linear"
IQR_MULTIPLIER = 1.5


@dataclass(frozen=True)
class TruncationSplit:
    truncated: np.ndarray
    outliers: np.ndarray
    fences: tuple
    block_index: int = 0
    mask: np.ndarray = None  # True where the block value is an outlier


@dataclass(frozen=True)
class NormalityReport:
    ks_distance: float
    p_value: float
    skewness: float
    kurtosis: float  # raw, normal = 3
    sample_sd: float
    n: int


def iqr_fences(block, multiplier=IQR_MULTIPLIER):
    x = np.asarray(block, dtype=float)
    if x.size == 0:
        raise ValidationError("cannot split an empty block")
    q1, q3 = np.percentile(x, [25, 75], method=QUARTILE_METHOD)
    iqr = q3 - q1
    return q1 - multiplier * iqr, q3 + multiplier * iqr


def iqr_split(block, multiplier=IQR_MULTIPLIER, block_index=0):
    """Values inside the closed fence ``[Q1 - c IQR, Q3 + c IQR]`` versus the rest."""
    x = np.asarray(block, dtype=float)
    low, high = iqr_fences(x, multiplier)
    out = (x < low) | (x > high)
    return TruncationSplit(x[~out], x[out], (float(low), float(high)), block_index, out)


def kolmogorov_sf(x, terms=100, tol=1e-12):
    """Asymptotic Kolmogorov survival function ``P(sqrt(n) D > x)``.

    Uses the alternating series ``2 sum (-1)^(j-1) exp(-2 j^2 x^2)`` for
    ``x >= 1`` and the Jacobi theta form (same limit law) for smaller ``x``,
    where the alternating series converges too slowly.
    """
    if x <= 0:
        return 1.0
    if x < 1.0:
        total = 0.0
        for j in range(1, terms + 1):
            term = np.exp(-((2 * j - 1) ** 2) * np.pi ** 2 / (8 * x * x))
            total += term
            if term < tol:
                break
        return float(min(max(1.0 - np.sqrt(2 * np.pi) / x * total, 0.0), 1.0))
    total = 0.0
    for j in range(1, terms + 1):
        term = np.exp(-2.0 * j * j * x * x)
        total += (-1) ** (j - 1) * term
        if term < tol:
            break
    return float(min(max(2.0 * total, 0.0), 1.0))


def _central_moments(x):
    d = x - x.mean()
    return np.mean(d ** 2), np.mean(d ** 3), np.mean(d ** 4)


def moment_diagnostics(sample):
    """Skewness ``m3/m2^1.5`` and raw kurtosis ``m4/m2^2`` with 1/n moments."""
    x = np.asarray(sample, dtype=float)
    if x.size < 4:
        raise ValidationError("moment diagnostics need at least 4 values")
    m2, m3, m4 = _central_moments(x)
    if not m2 > 0:
        raise ValidationError("sample has zero spread")
    return float(m3 / m2 ** 1.5), float(m4 / m2 ** 2)


def ks_normal_test(sample):
    """One-sample KS test against the normal with the sample's mean and sd.

    The p-value is the plain asymptotic one; no Lilliefors correction is
    applied for the estimated parameters.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n < 8:
        raise ValidationError("KS test needs at least 8 values")
    sd = x.std(ddof=1)
    if not sd > 0:
        raise ValidationError("KS test on a constant sample")
    cdf = special.ndtr((x - x.mean()) / sd)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))
    skew, kurt = moment_diagnostics(x)
    return NormalityReport(d, kolmogorov_sf(np.sqrt(n) * d), skew, kurt, float(sd), n)


def variance_ratio_ftest(sd_a, n_a, sd_b, n_b):
    """Two-sided F-test p-value for equal variances."""
    if not (sd_a > 0 and sd_b > 0):
        raise ValidationError("standard deviations must be positive")
    if n_a < 2 or n_b < 2:
        raise ValidationError("each sample needs at least 2 observations")
    f = (sd_a / sd_b) ** 2
    d1, d2 = n_a - 1, n_b - 1
    lower = special.fdtr(d1, d2, f)
    upper = special.fdtrc(d1, d2, f)
    return float(min(1.0, 2.0 * min(lower, upper)))


def pairwise_ftests(sds, n):
    """p-values for all pairs ``i < j`` of equally sized blocks."""
    sds = np.asarray(sds, dtype=float)
    out = []
    for i in range(sds.size):
        for j in range(i + 1, sds.size):
            out.append(variance_ratio_ftest(sds[i], n, sds[j], n))
    return np.array(out)


def fence_tail_probability(split):
    """Normal probability mass outside the fences, fitted to the truncated part."""
    t = np.asarray(split.truncated, dtype=float)
    if t.size < 2:
        raise ValidationError("truncated part too small to fit a normal")
    sd = t.std(ddof=1)
    if not sd > 0:
        raise ValidationError("truncated part has zero spread")
    low, high = split.fences
    mu = t.mean()
    return float(special.ndtr((low - mu) / sd) + special.ndtr(-(high - mu) / sd))


DIAGNOSTIC_COLUMNS = ("block_index", "n_truncated", "n_outliers", "sd", "skewness",
                      "kurtosis", "ks_distance", "p_value", "tail_probability")


def block_diagnostics(blocks, multiplier=IQR_MULTIPLIER):
    """Split every block and compute its diagnostics row."""
    splits, rows = [], []
    for i, block in enumerate(blocks):
        split = iqr_split(block, multiplier, i)
        rep = ks_normal_test(split.truncated)
        splits.append(split)
        rows.append({
            "block_index": i,
            "n_truncated": int(split.truncated.size),
            "n_outliers": int(split.outliers.size),
            "sd": rep.sample_sd,
            "skewness": rep.skewness,
            "kurtosis": rep.kurtosis,
            "ks_distance": rep.ks_distance,
            "p_value": rep.p_value,
            "tail_probability": fence_tail_probability(split),
        })
    return splits, rows


def write_diagnostics(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=DIAGNOSTIC_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})


def read_diagnostics(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValidationError(f"{path}: no diagnostics rows")
    out = []
    for r in rows:
        out.append({k: (int(r[k]) if k in ("block_index", "n_truncated", "n_outliers")
                        else float(r[k])) for k in DIAGNOSTIC_COLUMNS})
    return out

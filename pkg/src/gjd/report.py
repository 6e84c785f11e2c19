"""Plot-data tables, PNG figures and a text summary from ``fit`` and ``price`` outputs.

Every table is a plain CSV so the figures can be redrawn with any tool; the
PNGs are a convenience rendering of the same tables. Given the same inputs
and seed the output directory is byte-identical between runs.
"""

import csv
import glob
import os
import re

import numpy as np
from scipy import special

from . import paramdoc, robust_stats
from .cli import read_price_csv
from .errors import ValidationError
from .jump_model import JumpParams, nb_pmf
from .qgaussian import QGaussianParams, density, mixing_density

QQ_BLOCKS = 6
DENSITY_COVERAGE = 0.999
NB_BIN = 5


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def write_table(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _require(path):
    if not os.path.exists(path):
        raise ValidationError(f"missing input file {path}")
    return path


def read_returns(path):
    with open(_require(path), newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValidationError(f"{path}: no returns")
    r = np.array([float(x["log_return"]) for x in rows])
    b = np.array([int(x["block_index"]) for x in rows])
    o = np.array([int(x["is_outlier"]) for x in rows], dtype=bool)
    return r, b, o


# --- tables -------------------------------------------------------------------

def qq_pairs(sample):
    """Sorted standardized sample against normal quantiles at ``(i - 1/2) / n``."""
    x = np.sort(np.asarray(sample, dtype=float))
    z = (x - x.mean()) / x.std(ddof=1)
    probs = (np.arange(1, x.size + 1) - 0.5) / x.size
    return special.ndtri(probs), z


def histogram(values, bins="sturges", range_=None):
    values = np.asarray(values, dtype=float)
    counts, edges = np.histogram(values, bins=bins, range=range_)
    return edges[:-1], edges[1:], counts


def density_overlay(truncated, params, coverage=DENSITY_COVERAGE):
    """Empirical density of centred non-zero truncated returns against the fitted q-Gaussian.

    The bins span the central ``coverage`` share of the returns; densities are
    normalized by the full sample size, so they stay comparable with the model.
    """
    x = np.asarray(truncated, dtype=float)
    x = x[x != 0.0]
    x = x - x.mean()
    tail = (1.0 - coverage) / 2.0
    # order statistics rather than interpolated quantiles, so coverage is never short
    lo = np.quantile(x, tail, method="lower")
    hi = np.quantile(x, 1.0 - tail, method="higher")
    edges = np.histogram_bin_edges(x[(x >= lo) & (x <= hi)], bins="fd", range=(lo, hi))
    counts, _ = np.histogram(x, bins=edges)
    width = np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    emp = counts / (x.size * width)
    sd = x.std(ddof=1)
    normal = np.exp(-0.5 * (mid / sd) ** 2) / (sd * np.sqrt(2 * np.pi))
    return edges[:-1], edges[1:], mid, emp, density(mid, params), normal


def mixing_overlay(sds, params):
    edges = np.histogram_bin_edges(sds, bins="sturges")
    counts, _ = np.histogram(sds, bins=edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    emp = counts / (len(sds) * np.diff(edges))
    model = mixing_density(mid, params) if not params.is_normal else np.zeros_like(mid)
    return edges[:-1], edges[1:], mid, emp, model


def nb_overlay(counts, params, width=NB_BIN):
    """Observed and expected numbers of blocks per count interval ``[0,5), [5,10), ...``."""
    counts = np.asarray(counts, dtype=int)
    top = (counts.max() // width + 1) * width
    lefts = np.arange(0, top, width)
    pmf = nb_pmf(np.arange(top), params)
    rows = []
    for a in lefts:
        observed = int(np.sum((counts >= a) & (counts < a + width)))
        expected = counts.size * float(pmf[a:a + width].sum())
        rows.append((int(a), int(a + width), observed, expected))
    return rows


def nb_qq(counts, params, seed):
    """Sorted observed counts against sorted NB draws of the same size."""
    rng = np.random.default_rng(seed)
    lam = rng.gamma(params.s, 1.0 / params.tau, size=len(counts))
    draws = np.sort(rng.poisson(lam))
    return np.sort(np.asarray(counts, dtype=int)), draws


_PRICE_FILE = re.compile(r"^(price|smile)_T(\d+)\.csv$")


def collect_price_tables(price_dirs):
    tables = []
    for d in price_dirs:
        if not os.path.isdir(d):
            raise ValidationError(f"missing price directory {d}")
        names = sorted(os.path.basename(p) for p in glob.glob(os.path.join(d, "*.csv")))
        found = [(n, _PRICE_FILE.match(n)) for n in names]
        found = [(n, m) for n, m in found if m]
        if not found:
            raise ValidationError(f"{d}: no price_T*.csv or smile_T*.csv tables")
        for name, m in found:
            tables.append((m.group(1), int(m.group(2)), read_price_csv(os.path.join(d, name))))
    return tables


# --- figures ------------------------------------------------------------------

def _figures(out, qq, diag, dens, mix, nb_rows, nbqq, tables):
    from . import plotting

    written = []

    fig, axes = plotting.figure(2, 3, width=3.2, height=3.0)
    for ax, (label, (theo, samp)) in zip(axes.flat, qq):
        ax.plot(theo, samp, ".", ms=2)
        lim = max(abs(theo).max(), abs(samp).max())
        ax.plot([-lim, lim], [-lim, lim], "k-", lw=0.8)
        ax.set_title(f"block {label}")
        ax.set_xlabel("normal quantile")
        ax.set_ylabel("standardized return")
    for ax in list(axes.flat)[len(qq):]:
        ax.set_visible(False)
    written.append(os.path.join(out, "qq_truncated.png"))
    plotting.save(fig, written[-1])

    fig, axes = plotting.figure(2, 3, width=3.2, height=2.8)
    for ax, key in zip(axes.flat, ("sd", "skewness", "kurtosis", "p_value", "tail_probability",
                                   "n_outliers")):
        vals = np.array([row[key] for row in diag], dtype=float)
        ax.hist(vals, bins=10 if key == "p_value" else "sturges",
                range=(0, 1) if key == "p_value" else None, color="tab:blue", edgecolor="white")
        ax.set_xlabel(key.replace("_", " "))
        ax.set_ylabel("blocks")
    written.append(os.path.join(out, "block_diagnostics.png"))
    plotting.save(fig, written[-1])

    left, right, mid, emp, model, normal = dens
    fig, axes = plotting.figure(1, 2)
    for ax, scale in zip(axes.flat, ("linear", "log")):
        ax.bar(left, emp, width=right - left, align="edge", color="lightgray", label="truncated returns")
        ax.plot(mid, model, color=plotting.GJD, label="q-Gaussian")
        ax.plot(mid, normal, color=plotting.BS, ls="--", label="normal")
        ax.set_yscale(scale)
        ax.set_xlabel("centred log return")
        ax.set_ylabel("density")
    axes[0, 0].legend()
    written.append(os.path.join(out, "density_overlay.png"))
    plotting.save(fig, written[-1])

    left, right, mid, emp, model = mix
    fig, axes = plotting.figure(1, 1)
    ax = axes[0, 0]
    ax.bar(left, emp, width=right - left, align="edge", color="lightgray", label="annual sd")
    ax.plot(mid, model, "o-", color=plotting.GJD, label="mixing density")
    ax.set_xlabel("daily standard deviation")
    ax.set_ylabel("density")
    ax.legend()
    written.append(os.path.join(out, "mixing_overlay.png"))
    plotting.save(fig, written[-1])

    fig, axes = plotting.figure(1, 2)
    labels = [f"[{a},{b})" for a, b, _, _ in nb_rows]
    pos = np.arange(len(nb_rows))
    axes[0, 0].bar(pos - 0.2, [r[2] for r in nb_rows], width=0.4, label="observed")
    axes[0, 0].bar(pos + 0.2, [r[3] for r in nb_rows], width=0.4, label="negative binomial")
    axes[0, 0].set_xticks(pos)
    axes[0, 0].set_xticklabels(labels, rotation=45)
    axes[0, 0].set_ylabel("blocks")
    axes[0, 0].legend()
    obs, sim = nbqq
    axes[0, 1].plot(sim, obs, "o")
    lim = max(obs.max(), sim.max())
    axes[0, 1].plot([0, lim], [0, lim], "k-", lw=0.8)
    axes[0, 1].set_xlabel("simulated count")
    axes[0, 1].set_ylabel("observed outliers per block")
    written.append(os.path.join(out, "nb_overlay.png"))
    plotting.save(fig, written[-1])

    for kind, T, rows in tables:
        K = np.array([r["strike"] for r in rows])
        fig, axes = plotting.figure(1, 2)
        axes[0, 0].plot(K, [r["model_price"] for r in rows], color=plotting.GJD, label="model")
        axes[0, 0].plot(K, [r["bs_price"] for r in rows], color=plotting.BS, ls="--", label="Black-Scholes")
        axes[0, 0].set_xlabel("strike")
        axes[0, 0].set_ylabel("call price")
        axes[0, 0].legend()
        axes[0, 1].plot(K, [r["implied_vol_model"] for r in rows], "o-", color=plotting.GJD, label="model")
        axes[0, 1].plot(K, [r["implied_vol_bs"] for r in rows], "--", color=plotting.BS, label="Black-Scholes")
        axes[0, 1].set_xlabel("strike")
        axes[0, 1].set_ylabel("implied vol (per sqrt day)")
        axes[0, 1].set_title(f"T = {T} trading days")
        written.append(os.path.join(out, f"{kind}_T{T:03d}.png"))
        plotting.save(fig, written[-1])
    return written


# --- driver -------------------------------------------------------------------

def build_report(fit_dir, price_dirs, out, *, seed=0, figures=True):
    """Write every table, figure and ``summary.txt`` into ``out``; return the paths."""
    doc = paramdoc.read(_require(os.path.join(fit_dir, "params.json")))
    diag = robust_stats.read_diagnostics(_require(os.path.join(fit_dir, "diagnostics.csv")))
    returns, block_idx, is_out = read_returns(os.path.join(fit_dir, "returns.csv"))
    tables = collect_price_tables(price_dirs)

    qparams = QGaussianParams(float(doc["q"]), float(doc["beta"]))
    annual = JumpParams(float(doc["gamma"]), float(doc["p"]), float(doc["m"]), float(doc["nu"]))
    os.makedirs(out, exist_ok=True)
    data = os.path.join(out, "data")
    os.makedirs(data, exist_ok=True)
    written = []

    n_blocks = int(block_idx.max()) + 1
    qq = []
    for b in range(max(0, n_blocks - QQ_BLOCKS), n_blocks):
        sel = (block_idx == b) & ~is_out
        theo, samp = qq_pairs(returns[sel])
        qq.append((b, (theo, samp)))
        written.append(write_table(os.path.join(data, f"qq_block_{b:03d}.csv"),
                                   ("normal_quantile", "sample_quantile"), zip(theo, samp)))

    for key in ("sd", "skewness", "kurtosis", "ks_distance", "p_value", "tail_probability",
                "n_outliers"):
        vals = [row[key] for row in diag]
        if key == "p_value":
            left, right, counts = histogram(vals, bins=10, range_=(0.0, 1.0))
        else:
            left, right, counts = histogram(vals)
        written.append(write_table(os.path.join(data, f"hist_{key}.csv"),
                                   ("bin_left", "bin_right", "count"), zip(left, right, counts)))

    outliers = returns[(block_idx >= 0) & is_out]
    if outliers.size:
        left, right, counts = histogram(outliers)
        written.append(write_table(os.path.join(data, "hist_outlier_returns.csv"),
                                   ("bin_left", "bin_right", "count"), zip(left, right, counts)))

    truncated = returns[(block_idx >= 0) & ~is_out]
    dens = density_overlay(truncated, qparams)
    written.append(write_table(os.path.join(data, "density_overlay.csv"),
                               ("z_left", "z_right", "z_mid", "empirical_density",
                                "qgaussian_density", "normal_density"), zip(*dens)))

    sds = np.array([row["sd"] for row in diag])
    mix = mixing_overlay(sds, qparams)
    written.append(write_table(os.path.join(data, "mixing_overlay.csv"),
                               ("sd_left", "sd_right", "sd_mid", "empirical_density",
                                "mixing_density"), zip(*mix)))

    counts = np.array([row["n_outliers"] for row in diag], dtype=int)
    nb_rows = nb_overlay(counts, annual)
    written.append(write_table(os.path.join(data, "nb_overlay.csv"),
                               ("count_left", "count_right", "observed_blocks", "expected_blocks"),
                               nb_rows))
    nbqq = nb_qq(counts, annual, seed)
    written.append(write_table(os.path.join(data, "nb_qq.csv"),
                               ("observed_count", "simulated_count"), zip(*nbqq)))

    if tables:
        rows = []
        for kind, T, tab in tables:
            for r in tab:
                rows.append((kind, T, r["strike"], r["model_price"], r["bs_price"],
                             r["implied_vol_model"], r["implied_vol_bs"]))
        written.append(write_table(os.path.join(data, "smile_tables.csv"),
                                   ("source", "maturity_trading_days", "strike", "model_price",
                                    "bs_price", "implied_vol_model", "implied_vol_bs"), rows))

    if figures:
        fig_dir = os.path.join(out, "figures")
        os.makedirs(fig_dir, exist_ok=True)
        written.extend(_figures(fig_dir, qq, diag, dens, mix, nb_rows, nbqq, tables))

    summary = os.path.join(out, "summary.txt")
    with open(summary, "w", encoding="utf-8") as fh:
        fh.write(summary_text(doc, diag, tables, seed))
    written.append(summary)
    return written


def summary_text(doc, diag, tables, seed):
    p = np.array([row["p_value"] for row in diag])
    tail = np.array([row["tail_probability"] for row in diag])
    kurt = np.array([row["kurtosis"] for row in diag])
    n_out = sum(row["n_outliers"] for row in diag)
    n_all = sum(row["n_outliers"] + row["n_truncated"] for row in diag)
    lines = [
        "Model parameters",
        f"  q                 {doc['q']:.6g} ({doc.get('method', '?')})",
        f"  beta              {doc['beta']:.8g}",
        f"  variance          {doc.get('variance', float('nan')):.6g}",
        f"  NB gamma, p       {doc['gamma']:.6g}, {doc['p']:.6g}",
        f"  s annual / daily  {doc.get('s_annual', doc['gamma']):.6g} / {doc['s_daily']:.6g}",
        f"  tau               {doc['tau']:.6g}",
        f"  m, nu             {doc['m']:.6g}, {doc['nu']:.6g}",
        "",
        "Block diagnostics",
        f"  blocks                        {len(diag)}",
        f"  outliers                      {n_out} of {n_all} ({n_out / n_all:.2%})",
        f"  KS p-value < 0.1              {np.mean(p < 0.1):.1%} of blocks",
        f"  fence tail probability < 0.01 {np.mean(tail < 0.01):.1%} of blocks",
        f"  mean raw kurtosis             {kurt.mean():.4f}",
        "",
        f"Price tables: {len(tables)}",
    ]
    for kind, T, rows in tables:
        iv = np.array([r["implied_vol_model"] for r in rows])
        ok = np.isfinite(iv)
        if ok.any():
            i = int(np.argmin(np.where(ok, iv, np.inf)))
            at = f"min model implied vol {iv[i]:.6g} at K={rows[i]['strike']:g}"
        else:
            at = "no finite implied vols"
        lines.append(f"  {kind} T={T:3d}: {len(rows)} strikes, {at}")
    lines.append("")
    lines.append(f"seed {seed}")
    return "\n".join(lines) + "\n"

"""Command-line front end: ``fit``, ``price``, ``smile`` and ``report``.

Exit status is 0 on success, 1 for invalid input and 2 when a numerical
routine fails to converge.
"""

import argparse
import csv
import datetime as _dt
import json
import logging
import os
import sys

import numpy as np

from . import market_data, paramdoc, robust_stats
from .errors import ConvergenceError, GJDError, StageError, ValidationError
from .jump_model import fit_jump_size, fit_nb_mom, to_daily
from .pricing import QuadratureConfig, bs_call, gjd_prices, implied_vol, MarketInputs
from .qgaussian import estimate_q

log = logging.getLogger("gjd")

PRICE_COLUMNS = ("strike", "model_price", "bs_price", "implied_vol_model", "implied_vol_bs", "note")
DEFAULT_MATURITIES = "1,4,5,14,38,99"


class _Parser(argparse.ArgumentParser):
    """Argument errors are input errors, so they exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _floats(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _ints(text):
    vals = _floats(text)
    if any(v != int(v) or v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"expected positive whole numbers, got {text!r}")
    return [int(v) for v in vals]


def _positive(text):
    val = float(text)
    if not val > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return val


def _date(text):
    try:
        return _dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an ISO date, got {text!r}") from None


def _run(stage, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (GJDError, OSError) as exc:
        raise StageError(stage, exc) from exc


def _num(x):
    return repr(float(x))


# --- fit ---------------------------------------------------------------------

def fit(prices_path, *, block_length=market_data.BLOCK_LENGTH,
        iqr_mult=robust_stats.IQR_MULTIPLIER, q_method="cdf"):
    """Whole calibration pipeline; returns ``(document, diagnostics_rows, blocks, splits)``."""
    prices = _run(f"load {prices_path}", market_data.load_prices, prices_path)
    if len(prices) < block_length + 1:
        raise StageError(f"load {prices_path}", ValidationError(
            f"need at least {block_length + 1} prices for one block, got {len(prices)}"))
    returns = _run("returns", market_data.log_returns, prices, block_length)
    blocks = _run("blocks", market_data.block_annual, returns, block_length)
    splits = _run("truncate", lambda: [robust_stats.iqr_split(b, iqr_mult, i)
                                       for i, b in enumerate(blocks.blocks)])
    truncated = np.concatenate([s.truncated for s in splits])
    outliers = np.concatenate([s.outliers for s in splits])
    counts = np.array([s.outliers.size for s in splits])

    qfit = _run(f"estimate_q ({q_method})", estimate_q, truncated, q_method)
    m, nu = _run("fit_jumps (pooled outliers)", fit_jump_size, outliers)
    annual = _run("fit_nb (annual outlier counts)", fit_nb_mom, counts, m=m, nu=nu)
    daily = _run("to_daily", to_daily, annual)
    _, rows = _run("diagnostics", robust_stats.block_diagnostics, blocks.blocks, iqr_mult)

    n_used = blocks.used
    doc = paramdoc.build(
        qfit, annual, daily,
        q_method=q_method,
        beta_variance=qfit.beta_variance,
        block_length=block_length,
        n_blocks=len(blocks),
        n_returns=len(returns),
        dropped_tail=blocks.dropped_tail,
        iqr_multiplier=iqr_mult,
        n_outliers=int(outliers.size),
        outlier_fraction=float(outliers.size / n_used),
        count_mean=float(counts.mean()),
        count_variance=float(counts.var(ddof=1)) if counts.size > 1 else float("nan"),
        first_date=returns.dates[0].isoformat(),
        last_date=returns.dates[-1].isoformat(),
    )
    return doc, rows, blocks, splits, returns


def write_returns(path, returns, blocks, splits):
    L = blocks.block_length
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "log_return", "block_index", "is_outlier"])
        for i, (d, r) in enumerate(zip(returns.dates, returns.returns)):
            b = i // L
            if b < len(splits):
                flag = int(splits[b].mask[i % L])
            else:
                b, flag = -1, 0
            w.writerow([d.isoformat(), _num(r), b, flag])


def cmd_fit(args):
    doc, rows, blocks, splits, returns = fit(
        args.prices, block_length=args.block_length, iqr_mult=args.iqr_mult,
        q_method=args.q_method)
    os.makedirs(args.out, exist_ok=True)
    paths = {name: os.path.join(args.out, name)
             for name in ("params.json", "diagnostics.csv", "returns.csv")}
    _run("write", paramdoc.write, paths["params.json"], doc)
    _run("write", robust_stats.write_diagnostics, paths["diagnostics.csv"], rows)
    _run("write", write_returns, paths["returns.csv"], returns, blocks, splits)
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


# --- price / smile -----------------------------------------------------------

def trading_days(maturities, calendar_from=None):
    """Maturities in trading days; calendar counts from ``calendar_from`` drop weekends."""
    if calendar_from is None:
        return [(int(t), None) for t in maturities]
    start = np.datetime64(calendar_from)
    out = []
    for c in maturities:
        t = int(np.busday_count(start, start + np.timedelta64(int(c), "D")))
        if t < 1:
            raise ValidationError(f"{c} calendar days from {calendar_from} contain no trading day")
        out.append((t, int(c)))
    return out


def price_table(doc, S, strikes, r_daily, T, cfg):
    """Rows of model and matched-variance Black-Scholes prices for one maturity."""
    model = _run("params", paramdoc.model_from, doc)
    strikes = np.asarray(strikes, dtype=float)
    if not S > 0 or np.any(strikes <= 0):
        raise StageError("price", ValidationError("spot and strikes must be positive"))
    prices, bounds = _run(f"price T={T}", gjd_prices, S, strikes, r_daily, T, model, cfg)
    sigma = model.diffusion.sd
    bs = bs_call(S, strikes, sigma, r_daily, T)
    rows = []
    for K, p, e, b in zip(strikes, prices, bounds, bs):
        notes, ivs = [], []
        for label, value in (("model", p), ("bs", b)):
            try:
                ivs.append(implied_vol(float(value), MarketInputs(S, float(K), r_daily, T)))
            except (ValidationError, ConvergenceError) as exc:
                ivs.append(float("nan"))
                notes.append(f"implied_vol_{label}: {exc}")
                log.warning("T=%d K=%g: implied vol (%s) failed: %s", T, K, label, exc)
        rows.append({"strike": float(K), "model_price": float(p), "error_bound": float(e),
                     "bs_price": float(b), "implied_vol_model": ivs[0],
                     "implied_vol_bs": ivs[1], "note": "; ".join(notes)})
    return rows


def write_price_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PRICE_COLUMNS)
        for row in rows:
            w.writerow([_num(row[c]) if c != "note" else row[c] for c in PRICE_COLUMNS])


def write_price_json(path, meta, rows):
    def clean(v):
        return None if isinstance(v, float) and not np.isfinite(v) else v
    body = dict(meta, rows=[{k: clean(v) for k, v in row.items()} for row in rows])
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_price_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames[:5]) != list(PRICE_COLUMNS[:5]):
            raise ValidationError(f"{path}: not a price table")
        return [{k: (row[k] if k == "note" else float(row[k])) for k in PRICE_COLUMNS if k in row}
                for row in reader]


def _price_run(args, strikes, prefix):
    doc = _run(f"params {args.params}", paramdoc.read, args.params)
    _run(f"params {args.params}", paramdoc.model_from, doc)
    cfg = _run("config", QuadratureConfig, abs_tol=args.tol_abs, rel_tol=args.tol_rel)
    r_daily = args.rate_annual / args.day_count
    mats = _run("maturities", trading_days, args.maturities_days, args.calendar_from)
    os.makedirs(args.out, exist_ok=True)
    for T, cal in mats:
        rows = price_table(doc, args.spot, strikes, r_daily, T, cfg)
        stem = os.path.join(args.out, f"{prefix}_T{T:03d}")
        meta = {"spot": args.spot, "rate_annual": args.rate_annual, "day_count": args.day_count,
                "rate_daily": r_daily, "maturity_trading_days": T, "maturity_calendar_days": cal,
                "bs_sigma_daily": paramdoc.model_from(doc).diffusion.sd,
                "abs_tol": cfg.abs_tol, "rel_tol": cfg.rel_tol}
        _run("write", write_price_csv, stem + ".csv", rows)
        _run("write", write_price_json, stem + ".json", meta, rows)
        print(stem + ".csv")
    return 0


def cmd_price(args):
    return _price_run(args, args.strikes, "price")


def cmd_smile(args):
    if args.strikes is not None:
        strikes = args.strikes
    else:
        lo, hi = args.moneyness
        if not 0 < lo < hi:
            raise StageError("config", ValidationError("moneyness range must satisfy 0 < lo < hi"))
        strikes = list(args.spot * np.linspace(lo, hi, args.n_strikes))
    return _price_run(args, strikes, "smile")


def cmd_report(args):
    from . import report

    paths = _run("report", report.build_report, args.fit_dir, args.price_dir or [], args.out,
                 seed=args.seed)
    for p in paths:
        print(p)
    return 0


# --- parser ------------------------------------------------------------------

def _pricing_flags(p):
    p.add_argument("--params", required=True, help="parameter JSON document")
    p.add_argument("--spot", type=_positive, required=True)
    p.add_argument("--rate-annual", type=float, default=0.04)
    p.add_argument("--day-count", type=_positive, default=365.0,
                   help="divisor turning the annual rate into a daily rate (default 365)")
    p.add_argument("--maturities-days", type=_ints, default=_ints(DEFAULT_MATURITIES),
                   help="comma-separated maturities, trading days unless --calendar-from is given")
    p.add_argument("--calendar-from", type=_date, default=None,
                   help="read maturities as calendar days from this date and drop weekends")
    p.add_argument("--tol-abs", type=_positive, default=QuadratureConfig.abs_tol)
    p.add_argument("--tol-rel", type=_positive, default=QuadratureConfig.rel_tol)
    p.add_argument("--out", required=True, help="output directory")


def build_parser():
    parser = _Parser(prog="gjd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="calibrate the model to a daily close-price CSV")
    p.add_argument("--prices", required=True)
    p.add_argument("--block-length", type=int, default=market_data.BLOCK_LENGTH)
    p.add_argument("--iqr-mult", type=_positive, default=robust_stats.IQR_MULTIPLIER)
    p.add_argument("--q-method", choices=("cdf", "ferri"), default="cdf")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("price", help="model and Black-Scholes prices for given strikes")
    _pricing_flags(p)
    p.add_argument("--strikes", type=_floats, required=True)
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("smile", help="implied-volatility smile over a strike grid")
    _pricing_flags(p)
    p.add_argument("--strikes", type=_floats, default=None)
    p.add_argument("--moneyness", type=_floats, default=[0.9, 1.1],
                   help="strike range as fractions of spot (default 0.9,1.1)")
    p.add_argument("--n-strikes", type=int, default=21)
    p.set_defaults(func=cmd_smile)

    p = sub.add_parser("report", help="plot data, figures and a summary from fit and price outputs")
    p.add_argument("--fit-dir", required=True)
    p.add_argument("--price-dir", action="append", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "block_length", 1) < 1:
        parser.error("--block-length must be positive")
    if getattr(args, "n_strikes", 2) < 2:
        parser.error("--n-strikes must be at least 2")
    if getattr(args, "moneyness", [0, 1]) is not None and len(getattr(args, "moneyness", [0, 1])) != 2:
        parser.error("--moneyness takes two numbers")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"gjd {args.command}: error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc.cause, ConvergenceError) else 1


if __name__ == "__main__":
    sys.exit(main())

"""Daily closing prices: CSV ingestion, log returns, and fixed-length annual blocks."""

import csv
import datetime as _dt
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError

log = logging.getLogger(__name__)

BLOCK_LENGTH = 252


@dataclass(frozen=True)
class PriceSeries:
    records: tuple  # ((date, close), ...)
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        dates = [d for d, _ in self.records]
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise ValidationError("price dates must be strictly increasing")
        for d, c in self.records:
            if not (np.isfinite(c) and c > 0):
                raise ValidationError(f"close on {d} must be positive, got {c}")

    def __len__(self):
        return len(self.records)

    @property
    def dates(self):
        return [d for d, _ in self.records]

    @property
    def closes(self):
        return np.array([c for _, c in self.records], dtype=float)


@dataclass(frozen=True)
class ReturnSeries:
    dates: tuple
    returns: np.ndarray
    block_length: int = BLOCK_LENGTH

    def __len__(self):
        return self.returns.size


@dataclass(frozen=True)
class AnnualBlocks:
    blocks: tuple  # tuple of 1-d arrays, oldest first
    dropped_tail: int
    block_length: int

    def __len__(self):
        return len(self.blocks)

    @property
    def used(self):
        return len(self.blocks) * self.block_length


def load_prices(path):
    """Read a ``date,close`` CSV with ISO dates.

    Rows out of date order are sorted with a warning; duplicate dates and
    non-positive closes are rejected.
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("empty file", line=1)
        if [h.strip().lower() for h in header] != ["date", "close"]:
            raise ParseError(f"expected header 'date,close', got {','.join(header)!r}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", line=lineno)
            try:
                date = _dt.date.fromisoformat(row[0].strip())
            except ValueError:
                raise ParseError(f"bad ISO date {row[0]!r}", line=lineno, column=1) from None
            try:
                close = float(row[1])
            except ValueError:
                raise ParseError(f"bad number {row[1]!r}", line=lineno, column=2) from None
            if not (np.isfinite(close) and close > 0):
                raise ParseError(f"close must be positive, got {row[1].strip()}",
                                 line=lineno, column=2)
            rows.append((lineno, date, close))
    if not rows:
        raise ParseError("no price records", line=2)

    warnings = []
    if any(b[1] < a[1] for a, b in zip(rows, rows[1:])):
        msg = "records were not in date order; sorted ascending"
        log.warning(msg)
        warnings.append(msg)
        rows.sort(key=lambda r: r[1])
    for a, b in zip(rows, rows[1:]):
        if a[1] == b[1]:
            raise ParseError(f"duplicate date {b[1].isoformat()} (also on line {a[0]})",
                             line=b[0], column=1)
    return PriceSeries(tuple((d, c) for _, d, c in rows), tuple(warnings))


def log_returns(prices, block_length=BLOCK_LENGTH):
    """``ln(close[n+1]) - ln(close[n])``, dated by the later close; zeros kept."""
    if len(prices) < 2:
        raise ValidationError("need at least two prices to form a return")
    r = np.diff(np.log(prices.closes))
    return ReturnSeries(tuple(prices.dates[1:]), r, block_length)


def block_annual(returns, block_length=None):
    """Cut the oldest ``floor(N / L) * L`` returns into blocks of length ``L``."""
    block_length = block_length or returns.block_length
    r = returns.returns if isinstance(returns, ReturnSeries) else np.asarray(returns, dtype=float)
    if block_length < 1:
        raise ValidationError("block length must be positive")
    if r.size < block_length:
        raise ValidationError(f"need at least {block_length} returns, got {r.size}")
    n = r.size // block_length
    blocks = tuple(r[i * block_length:(i + 1) * block_length].copy() for i in range(n))
    return AnnualBlocks(blocks, int(r.size - n * block_length), block_length)


def write_prices(path, prices):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "close"])
        for d, c in prices.records:
            w.writerow([d.isoformat(), repr(float(c))])

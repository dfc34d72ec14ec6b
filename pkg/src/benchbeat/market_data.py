"""Monthly index/CPI ingestion, deflation, inflation-regime filtering, GBM fits.

All operations are pure functions over immutable tables; callers get new
objects back, never mutated inputs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "IngestionError",
    "ReturnTable",
    "RegimeMask",
    "load_return_table",
    "deflate",
    "cpi_index_from_returns",
    "filter_high_inflation",
    "regime_spans",
    "extract_concatenate",
    "fit_gbm",
]


class IngestionError(ValueError):
    """Raised when input data violates the table contract."""


def _month_ordinal(date_str):
    """'YYYY-MM' -> integer month count. Raises IngestionError on bad format."""
    try:
        year, month = date_str.split("-")
        y, m = int(year), int(month)
        if not 1 <= m <= 12:
            raise ValueError
    except ValueError:
        raise IngestionError(f"unparsable date {date_str!r} (expected YYYY-MM)") from None
    return y * 12 + (m - 1)


@dataclass
class ReturnTable:
    """Dated monthly per-asset simple returns plus an optional CPI return series.

    ``segments`` records [start, stop) row spans of consecutive-month runs;
    a freshly loaded table has a single segment covering all rows.
    """

    dates: tuple
    assets: tuple
    returns: np.ndarray  # (n_dates, n_assets)
    cpi_return: np.ndarray | None = None  # (n_dates,)
    segments: tuple = field(default=())

    def __post_init__(self):
        self.returns = np.asarray(self.returns, dtype=float)
        if self.returns.ndim != 2 or self.returns.shape != (len(self.dates), len(self.assets)):
            raise IngestionError(
                f"returns shape {self.returns.shape} does not match "
                f"{len(self.dates)} dates x {len(self.assets)} assets"
            )
        if self.cpi_return is not None:
            self.cpi_return = np.asarray(self.cpi_return, dtype=float)
            if self.cpi_return.shape != (len(self.dates),):
                raise IngestionError("cpi_return length does not match dates")
        if not self.segments:
            self.segments = ((0, len(self.dates)),)
        ords = [_month_ordinal(d) for d in self.dates]
        for start, stop in self.segments:
            for i in range(start + 1, stop):
                if ords[i] != ords[i - 1] + 1:
                    raise IngestionError(
                        f"non-monotone dates: {self.dates[i - 1]} -> {self.dates[i]}"
                    )
        bad = np.argwhere(self.returns <= -1.0)
        if bad.size:
            r, c = bad[0]
            raise IngestionError(
                f"return <= -1 at date {self.dates[r]}, asset {self.assets[c]}"
            )
        if self.cpi_return is not None and np.any(self.cpi_return <= -1.0):
            i = int(np.argmax(self.cpi_return <= -1.0))
            raise IngestionError(f"cpi return <= -1 at date {self.dates[i]}")

    @property
    def n_dates(self):
        return len(self.dates)


def load_return_table(path, date_col="date", cpi_col="cpi", asset_cols=None):
    """Load a monthly CSV: one date column, one column per asset, optional CPI.

    Columns other than ``date_col``/``cpi_col`` are asset columns unless
    ``asset_cols`` restricts them. Returns may still be nominal; deflation is
    a separate step.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or date_col not in reader.fieldnames:
            raise IngestionError(f"missing column {date_col!r} in {path}")
        if asset_cols is None:
            asset_cols = [c for c in reader.fieldnames if c not in (date_col, cpi_col)]
        else:
            for c in asset_cols:
                if c not in reader.fieldnames:
                    raise IngestionError(f"missing column {c!r} in {path}")
        has_cpi = cpi_col in reader.fieldnames
        dates, rows, cpi = [], [], []
        for lineno, rec in enumerate(reader, start=2):
            dates.append(rec[date_col])
            row = []
            for c in asset_cols:
                try:
                    row.append(float(rec[c]))
                except (TypeError, ValueError):
                    raise IngestionError(
                        f"unparsable number in column {c!r} at line {lineno}"
                    ) from None
            rows.append(row)
            if has_cpi:
                try:
                    cpi.append(float(rec[cpi_col]))
                except (TypeError, ValueError):
                    raise IngestionError(
                        f"unparsable number in column {cpi_col!r} at line {lineno}"
                    ) from None
    if not dates:
        raise IngestionError(f"no data rows in {path}")
    return ReturnTable(
        dates=tuple(dates),
        assets=tuple(asset_cols),
        returns=np.array(rows, dtype=float),
        cpi_return=np.array(cpi, dtype=float) if has_cpi else None,
    )


def deflate(nominal):
    """Convert nominal returns to real via exact index deflation.

    real = (1 + nominal) / (1 + cpi) - 1, per date per asset. The output
    table's CPI column is zeroed (already real).
    """
    if nominal.cpi_return is None:
        raise IngestionError("deflate requires a CPI return series")
    real = (1.0 + nominal.returns) / (1.0 + nominal.cpi_return[:, None]) - 1.0
    return ReturnTable(
        dates=nominal.dates,
        assets=nominal.assets,
        returns=real,
        cpi_return=np.zeros(nominal.n_dates),
        segments=nominal.segments,
    )


@dataclass
class RegimeMask:
    """Per-month high-inflation indicator from the moving-window filter."""

    flags: np.ndarray  # (n_months,) of {0, 1}
    window_k: int
    cutoff: float

    def __post_init__(self):
        self.flags = np.asarray(self.flags, dtype=int)
        if not np.isin(self.flags, (0, 1)).all():
            raise ValueError("flags must be 0/1")


def cpi_index_from_returns(cpi_returns, base=1.0):
    """Rebuild an index level series (length n+1) from n monthly returns."""
    levels = np.empty(len(cpi_returns) + 1)
    levels[0] = base
    np.cumprod(1.0 + np.asarray(cpi_returns, dtype=float), out=levels[1:])
    levels[1:] *= base
    return levels


def filter_high_inflation(cpi_index, window_k, cutoff, dt=1.0 / 12.0):
    """Moving-window filter: flag every month covered by a window whose
    annualized log CPI growth exceeds the cutoff.

    For each start i with i + K in range, if log(CPI[i+K]/CPI[i])/(K*dt) >
    cutoff, months i..i+K are all flagged (windows may overlap; flags OR
    together). The trailing K-1 months can only be flagged through earlier
    windows; there is no edge padding.
    """
    cpi_index = np.asarray(cpi_index, dtype=float)
    n = len(cpi_index)
    if window_k >= n:
        raise ValueError(f"window_k={window_k} must be < series length {n}")
    if np.any(cpi_index <= 0):
        raise ValueError("CPI index levels must be positive")
    flags = np.zeros(n, dtype=int)
    growth = np.log(cpi_index[window_k:] / cpi_index[:-window_k]) / (window_k * dt)
    for i in np.nonzero(growth > cutoff)[0]:
        flags[i : i + window_k + 1] = 1
    return RegimeMask(flags=flags, window_k=window_k, cutoff=cutoff)


def regime_spans(mask):
    """Contiguous flagged runs as a list of (start, stop) row spans."""
    flags = np.concatenate([[0], mask.flags, [0]])
    edges = np.flatnonzero(np.diff(flags))
    return [(int(edges[i]), int(edges[i + 1])) for i in range(0, len(edges), 2)]


def extract_concatenate(table, mask):
    """Keep flagged rows in original order; record segment boundaries."""
    if len(mask.flags) != table.n_dates:
        raise ValueError("mask not aligned with table dates")
    spans = regime_spans(mask)
    if not spans:
        raise ValueError("no flagged months")
    idx = np.concatenate([np.arange(a, b) for a, b in spans])
    seg_bounds = []
    pos = 0
    for a, b in spans:
        seg_bounds.append((pos, pos + (b - a)))
        pos += b - a
    return ReturnTable(
        dates=tuple(table.dates[i] for i in idx),
        assets=table.assets,
        returns=table.returns[idx],
        cpi_return=None if table.cpi_return is None else table.cpi_return[idx],
        segments=tuple(seg_bounds),
    )


def fit_gbm(series, dt=1.0 / 12.0):
    """MLE fit of GBM drift/volatility from simple returns.

    With m, s the sample mean and population (1/n) standard deviation of
    log(1 + return): sigma = s/sqrt(dt), mu = m/dt + sigma^2/2 (drift of the
    arithmetic SDE dS = mu*S dt + sigma*S dZ).
    """
    series = np.asarray(series, dtype=float)
    if series.size < 2:
        raise ValueError("need at least 2 returns to fit GBM")
    if np.any(series <= -1.0):
        raise ValueError("return <= -1 in series")
    log_r = np.log1p(series)
    m = log_r.mean()
    s = log_r.std()  # population (ddof=0), matching MLE
    sigma = s / math.sqrt(dt)
    mu = m / dt + 0.5 * sigma**2
    return mu, sigma

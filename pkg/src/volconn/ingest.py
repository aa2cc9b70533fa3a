"""Intraday price ingestion: parsing, session bucketing, log returns.

The trading day is defined around the electronic session: it opens at a
local wall-clock time on one calendar day and closes the next day, and the
session is labeled by the calendar date of its close. Records inside the
maintenance gap between close and the next open are dropped.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import logging
import math
from dataclasses import dataclass, field
from zoneinfo import ZoneInfo

import numpy as np

logger = logging.getLogger(__name__)


class IngestError(ValueError):
    pass


@dataclass(frozen=True)
class PriceRecord:
    timestamp: dt.datetime  # aware
    symbol: str
    price: float


def _nth_weekday(year: int, month: int, weekday: int, n: int) -> dt.date:
    d = dt.date(year, month, 1)
    offset = (weekday - d.weekday()) % 7
    return d + dt.timedelta(days=offset + 7 * (n - 1))


def _last_weekday(year: int, month: int, weekday: int) -> dt.date:
    if month == 12:
        d = dt.date(year, 12, 31)
    else:
        d = dt.date(year, month + 1, 1) - dt.timedelta(days=1)
    return d - dt.timedelta(days=(d.weekday() - weekday) % 7)


def us_federal_holidays(year: int) -> set[dt.date]:
    """Actual-date US federal holidays (no observed-day shifting)."""
    days = {
        dt.date(year, 1, 1),                      # New Year's Day
        _nth_weekday(year, 1, 0, 3),              # Martin Luther King Jr. Day
        _nth_weekday(year, 2, 0, 3),              # Washington's Birthday
        _last_weekday(year, 5, 0),                # Memorial Day
        dt.date(year, 7, 4),                      # Independence Day
        _nth_weekday(year, 9, 0, 1),              # Labor Day
        _nth_weekday(year, 10, 0, 2),             # Columbus Day
        dt.date(year, 11, 11),                    # Veterans Day
        _nth_weekday(year, 11, 3, 4),             # Thanksgiving
        dt.date(year, 12, 25),                    # Christmas Day
    }
    if year >= 2021:
        days.add(dt.date(year, 6, 19))            # Juneteenth
    return days


def is_excluded_date(d: dt.date) -> bool:
    """Default calendar filter: federal holidays, Dec 24-26, Dec 31-Jan 2."""
    if d in us_federal_holidays(d.year):
        return True
    if d.month == 12 and d.day in (24, 25, 26, 31):
        return True
    if d.month == 1 and d.day in (1, 2):
        return True
    return False


@dataclass(frozen=True)
class SessionSpec:
    """Electronic-session clock and calendar exclusions.

    The default matches CME FX futures: open 17:00, close 16:00 the next
    calendar day, US Central wall-clock time.
    """

    session_start: dt.time = dt.time(17, 0)
    session_end: dt.time = dt.time(16, 0)
    timezone: str = "America/Chicago"
    holiday_rules: tuple = (is_excluded_date,)
    resample_minutes: int | None = None

    def is_holiday(self, d: dt.date) -> bool:
        return any(rule(d) for rule in self.holiday_rules)


def holiday_file_rule(path):
    """Holiday predicate from a file of ISO dates, one per line."""
    with open(path) as fh:
        dates = frozenset(
            dt.date.fromisoformat(line.strip()) for line in fh if line.strip() and not line.startswith("#")
        )
    return dates.__contains__


@dataclass(frozen=True)
class IntradaySeries:
    """Session-bucketed log-prices for one asset, sessions date-ordered."""

    symbol: str
    sessions: tuple[tuple[dt.date, np.ndarray], ...]  # (close date, log-prices)

    def session_returns(self):
        """(date, intraday log returns) per session."""
        return [(d, np.diff(p)) for d, p in self.sessions]


@dataclass
class IngestReport:
    rejected_rows: int = 0
    gap_records: int = 0
    holiday_records: int = 0
    dropped_sessions: int = 0
    rejected_lines: list[int] = field(default_factory=list)


def parse_price_records(stream, timestamp_col: str = "timestamp", symbol_col: str = "symbol",
                        price_col: str = "price", sep: str | None = None,
                        report: IngestReport | None = None) -> dict[str, list[PriceRecord]]:
    """Parse delimited text with a header into per-symbol sorted records.

    Duplicate (symbol, timestamp) pairs keep the last record seen; rows with
    non-positive prices are rejected and counted. Malformed rows raise with
    their line number.
    """
    if isinstance(stream, (bytes, bytearray)):
        stream = io.StringIO(stream.decode("utf-8"))
    elif isinstance(stream, str):
        stream = io.StringIO(stream)

    first = stream.readline()
    if not first.strip():
        return {}
    if sep is None:
        sep = "\t" if "\t" in first else ","
    header = [h.strip() for h in first.rstrip("\n").split(sep)]
    try:
        i_ts = header.index(timestamp_col)
        i_sym = header.index(symbol_col)
        i_px = header.index(price_col)
    except ValueError as exc:
        raise IngestError(f"missing column in header {header}: {exc}") from exc

    report = report if report is not None else IngestReport()
    by_key: dict[tuple[str, dt.datetime], PriceRecord] = {}
    reader = csv.reader(stream, delimiter=sep)
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) <= max(i_ts, i_sym, i_px):
            raise IngestError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            ts = dt.datetime.fromisoformat(row[i_ts].strip())
        except ValueError as exc:
            raise IngestError(f"line {lineno}: bad timestamp {row[i_ts]!r}") from exc
        if ts.tzinfo is None:
            raise IngestError(f"line {lineno}: timestamp {row[i_ts]!r} lacks a UTC offset")
        try:
            price = float(row[i_px])
        except ValueError as exc:
            raise IngestError(f"line {lineno}: bad price {row[i_px]!r}") from exc
        if not math.isfinite(price) or price <= 0:
            report.rejected_rows += 1
            report.rejected_lines.append(lineno)
            continue
        symbol = row[i_sym].strip()
        by_key[(symbol, ts)] = PriceRecord(timestamp=ts, symbol=symbol, price=price)

    out: dict[str, list[PriceRecord]] = {}
    for (symbol, _), rec in by_key.items():
        out.setdefault(symbol, []).append(rec)
    for symbol in out:
        out[symbol].sort(key=lambda r: r.timestamp)
    if report.rejected_rows:
        logger.warning("rejected %d rows with non-positive prices", report.rejected_rows)
    return out


def _session_label(local: dt.datetime, spec: SessionSpec) -> dt.date | None:
    """Calendar date of the session close, or None for gap records."""
    t = local.time()
    if spec.session_start > spec.session_end:
        # overnight session: open day d, close day d+1
        if t >= spec.session_start:
            return local.date() + dt.timedelta(days=1)
        if t < spec.session_end:
            return local.date()
        return None
    # same-day session
    if spec.session_start <= t < spec.session_end:
        return local.date()
    return None


def _resample_locf(times: list[dt.datetime], prices: list[float], minutes: int) -> list[float]:
    """Snap to a fixed grid, carrying the last observation forward."""
    step = dt.timedelta(minutes=minutes)
    start = times[0]
    # align grid to the whole minute grid of the session clock
    start = start - dt.timedelta(
        minutes=start.minute % minutes, seconds=start.second, microseconds=start.microsecond
    )
    out, i, last = [], 0, None
    grid = start
    while grid <= times[-1]:
        while i < len(times) and times[i] <= grid:
            last = prices[i]
            i += 1
        if last is not None:
            out.append(last)
        grid += step
    return out


def assign_sessions(records: list[PriceRecord], spec: SessionSpec,
                    report: IngestReport | None = None) -> IntradaySeries:
    """Bucket one symbol's records into sessions and apply the calendar.

    Sessions labeled on excluded dates are removed entirely, as are
    sessions with fewer than 2 prices (one price defines no return).
    """
    if not records:
        raise IngestError("no records to bucket")
    symbols = {r.symbol for r in records}
    if len(symbols) != 1:
        raise IngestError(f"assign_sessions expects a single symbol, got {sorted(symbols)}")
    report = report if report is not None else IngestReport()
    tz = ZoneInfo(spec.timezone)

    buckets: dict[dt.date, tuple[list[dt.datetime], list[float]]] = {}
    for rec in records:
        local = rec.timestamp.astimezone(tz)
        label = _session_label(local, spec)
        if label is None:
            report.gap_records += 1
            continue
        if spec.is_holiday(label):
            report.holiday_records += 1
            continue
        times, prices = buckets.setdefault(label, ([], []))
        times.append(local)
        prices.append(rec.price)

    sessions = []
    for label in sorted(buckets):
        times, prices = buckets[label]
        if spec.resample_minutes:
            prices = _resample_locf(times, prices, spec.resample_minutes)
        if len(prices) < 2:
            report.dropped_sessions += 1
            logger.info("%s: dropping session %s with %d price(s)", next(iter(symbols)), label, len(prices))
            continue
        sessions.append((label, np.log(np.asarray(prices, dtype=float))))
    return IntradaySeries(symbol=next(iter(symbols)), sessions=tuple(sessions))


def log_returns(prices: np.ndarray) -> np.ndarray:
    """r_k = ln(p_k) - ln(p_{k-1}) for a session's price path."""
    p = np.asarray(prices, dtype=float)
    if p.size < 2:
        raise IngestError("need at least 2 prices for a return")
    if np.any(~np.isfinite(p)) or np.any(p <= 0):
        raise IngestError("prices must be finite and strictly positive")
    return np.diff(np.log(p))

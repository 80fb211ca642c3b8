"""Loading daily stock CSVs and aligning pairs onto a common calendar."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DataError,
    DuplicateDate,
    EmptyOverlap,
    GapInCommonDomain,
    MissingColumn,
    NonFiniteValue,
    UnparsableRow,
)

CHANNELS = ("price", "volume", "return")
REQUIRED_COLUMNS = ("date", "adj_close", "volume")


@dataclass(frozen=True)
class TimeSeries:
    """A d-channel daily series on a strictly increasing date axis.

    ``channels`` maps channel name to a float vector; insertion order fixes
    the column order of :attr:`values`.
    """

    ticker: str
    dates: np.ndarray
    channels: dict = field(default_factory=dict)

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        object.__setattr__(self, "dates", dates)
        chans = {}
        for name, vec in self.channels.items():
            if name not in CHANNELS:
                raise DataError(f"unknown channel {name!r}; expected one of {CHANNELS}")
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != dates.shape:
                raise DataError(
                    f"channel {name!r} has length {arr.size}, expected {dates.size}"
                )
            if not np.all(np.isfinite(arr)):
                raise DataError(f"channel {name!r} contains non-finite values")
            arr.setflags(write=False)
            chans[name] = arr
        if not chans:
            raise DataError("a TimeSeries needs at least one channel")
        if dates.size == 0:
            raise DataError("a TimeSeries needs at least one observation")
        if dates.size > 1 and not np.all(dates[1:] > dates[:-1]):
            raise DataError("dates must be strictly increasing")
        dates.setflags(write=False)
        object.__setattr__(self, "channels", chans)

    def __len__(self):
        return int(self.dates.size)

    @property
    def channel_names(self) -> tuple:
        return tuple(self.channels)

    @property
    def values(self) -> np.ndarray:
        """(T, d) matrix of channel values."""
        return np.column_stack([self.channels[c] for c in self.channels])

    def select(self, mask_or_slice) -> "TimeSeries":
        return TimeSeries(
            self.ticker,
            self.dates[mask_or_slice],
            {k: v[mask_or_slice] for k, v in self.channels.items()},
        )

    def with_channels(self, names: Sequence[str]) -> "TimeSeries":
        return TimeSeries(self.ticker, self.dates, {n: self.channels[n] for n in names})


@dataclass(frozen=True)
class AlignmentReport:
    common_start: np.datetime64 | None
    common_end: np.datetime64 | None
    common_length: int
    dropped_left: int
    dropped_right: int
    gaps: list = field(default_factory=list)


def parse_channels(spec: str | Iterable[str]) -> tuple:
    """Normalize ``"price,volume"`` or an iterable into a validated tuple."""
    if isinstance(spec, str):
        names = [s.strip() for s in spec.split(",") if s.strip()]
    else:
        names = list(spec)
    bad = [n for n in names if n not in CHANNELS]
    if bad or not names:
        raise DataError(f"invalid channels {names!r}; choose from {CHANNELS}")
    if len(set(names)) != len(names):
        raise DataError(f"duplicate channel in {names!r}")
    return tuple(names)


def _parse_float(text, line, column, path):
    text = text.strip()
    if text == "":
        raise NonFiniteValue(line, column, path)
    try:
        value = float(text)
    except ValueError:
        raise UnparsableRow(line, f"({column}={text!r})", path) from None
    if not math.isfinite(value):
        raise NonFiniteValue(line, column, path)
    return value


def load_csv(path, channels=("price", "volume", "return"), ticker=None) -> TimeSeries:
    """Read a ``date,adj_close,volume`` CSV into a :class:`TimeSeries`.

    Rows may come in any order; they are sorted by date. When ``return`` is
    requested the simple return ``p[t] / p[t-1] - 1`` is derived from the
    adjusted close and the first row is dropped from every channel.
    Line numbers in errors count the header as line 1.
    """
    path = Path(path)
    channels = parse_channels(channels)
    ticker = ticker or path.stem
    dates, prices, volumes = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise MissingColumn("date", path) from None
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise MissingColumn(col, path)
        i_date, i_price, i_vol = (header.index(c) for c in REQUIRED_COLUMNS)
        width = max(i_date, i_price, i_vol) + 1
        for line, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < width:
                row = row + [""] * (width - len(row))
            try:
                day = np.datetime64(row[i_date].strip(), "D")
            except ValueError:
                raise UnparsableRow(line, f"(date={row[i_date]!r})", path) from None
            if np.isnat(day):
                raise UnparsableRow(line, "(empty date)", path)
            prices.append(_parse_float(row[i_price], line, "adj_close", path))
            volumes.append(_parse_float(row[i_vol], line, "volume", path))
            dates.append(day)

    dates = np.array(dates, dtype="datetime64[D]")
    order = np.argsort(dates, kind="stable")
    dates = dates[order]
    price = np.array(prices, dtype=np.float64)[order]
    volume = np.array(volumes, dtype=np.float64)[order]
    dup = np.flatnonzero(dates[1:] == dates[:-1])
    if dup.size:
        raise DuplicateDate(dates[dup[0] + 1], path)

    data = {"price": price, "volume": volume}
    if "return" in channels:
        if price.size < 2:
            raise DataError(f"{path}: need at least two rows to derive returns")
        if np.any(price[:-1] == 0):
            raise DataError(f"{path}: zero price makes returns undefined")
        data = {k: v[1:] for k, v in data.items()}
        data["return"] = price[1:] / price[:-1] - 1.0
        dates = dates[1:]
    return TimeSeries(ticker, dates, {c: data[c] for c in channels})


def validate_continuity(ts: TimeSeries, calendar) -> list:
    """Calendar dates inside ``ts``'s span that ``ts`` does not contain."""
    cal = np.unique(np.asarray(calendar, dtype="datetime64[D]"))
    window = cal[(cal >= ts.dates[0]) & (cal <= ts.dates[-1])]
    return list(np.setdiff1d(window, ts.dates, assume_unique=True))


def align_pair(a: TimeSeries, b: TimeSeries, calendar=None, strict=True):
    """Restrict two series to their common date domain.

    The domain runs from ``max(first dates)`` to ``min(last dates)``. Inside
    it both series must hold every trading day of ``calendar`` (default: the
    union of the two series' own dates). With ``strict`` a hole raises
    :class:`GapInCommonDomain`; otherwise the holes are recorded in the
    report and the series are cut down to their shared dates.

    Returns ``(a_aligned, b_aligned, report)``.
    """
    start = max(a.dates[0], b.dates[0])
    end = min(a.dates[-1], b.dates[-1])
    if start > end:
        raise EmptyOverlap(
            f"{a.ticker} [{a.dates[0]}..{a.dates[-1]}] and "
            f"{b.ticker} [{b.dates[0]}..{b.dates[-1]}] do not overlap"
        )
    if calendar is None:
        cal = np.union1d(a.dates, b.dates)
    else:
        cal = np.unique(np.asarray(calendar, dtype="datetime64[D]"))
    expected = cal[(cal >= start) & (cal <= end)]
    shared = np.intersect1d(a.dates, b.dates)
    shared = shared[(shared >= start) & (shared <= end)]

    missing = np.setdiff1d(expected, shared, assume_unique=True)
    gaps = []
    for day in missing:
        later = shared[shared > day]
        gaps.append((day, later[0] if later.size else None))
    if gaps and strict:
        raise GapInCommonDomain(gaps)
    if shared.size == 0:
        raise EmptyOverlap(f"{a.ticker} and {b.ticker} share no dates")

    a_out = a.select(np.isin(a.dates, shared))
    b_out = b.select(np.isin(b.dates, shared))
    dropped_left = int(np.sum(a.dates < start) + np.sum(b.dates < start))
    dropped_right = int(np.sum(a.dates > end) + np.sum(b.dates > end))
    report = AlignmentReport(
        common_start=shared[0],
        common_end=shared[-1],
        common_length=int(shared.size),
        dropped_left=dropped_left,
        dropped_right=dropped_right,
        gaps=gaps,
    )
    return a_out, b_out, report


def write_pair_csv(a: TimeSeries, b: TimeSeries, path) -> None:
    """Write an aligned pair as one CSV (``date,<A>:<chan>,...,<B>:<chan>,...``)."""
    if not np.array_equal(a.dates, b.dates):
        raise DataError("pair must be aligned before writing")
    header = ["date"] + [f"{a.ticker}:{c}" for c in a.channels] + [
        f"{b.ticker}:{c}" for c in b.channels
    ]
    cols = [a.channels[c] for c in a.channels] + [b.channels[c] for c in b.channels]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for t, day in enumerate(a.dates):
            writer.writerow([str(day)] + [repr(float(col[t])) for col in cols])


def read_pair_csv(path) -> tuple:
    """Inverse of :func:`write_pair_csv`."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    tickers = []
    for col in header[1:]:
        tick = col.split(":", 1)[0]
        if tick not in tickers:
            tickers.append(tick)
    if len(tickers) != 2:
        raise DataError(f"{path}: expected columns for exactly two tickers")
    dates = np.array([r[0] for r in rows], dtype="datetime64[D]")
    out = []
    for tick in tickers:
        chans = {}
        for j, col in enumerate(header[1:], start=1):
            t, c = col.split(":", 1)
            if t == tick:
                chans[c] = np.array([float(r[j]) for r in rows])
        out.append(TimeSeries(tick, dates, chans))
    return out[0], out[1]


def write_series_csv(ts: TimeSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", *ts.channels])
        for t, day in enumerate(ts.dates):
            writer.writerow([str(day)] + [repr(float(v[t])) for v in ts.channels.values()])


def read_series_csv(path, ticker=None) -> TimeSeries:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    dates = np.array([r[0] for r in rows], dtype="datetime64[D]")
    chans = {c: np.array([float(r[j]) for r in rows]) for j, c in enumerate(header[1:], 1)}
    return TimeSeries(ticker or path.stem, dates, chans)

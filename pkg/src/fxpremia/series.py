"""Monthly spot/forward ingestion and construction of the aligned series.

The package works throughout with three log series derived from end-of-month
spot rates and 1-month forward rates, all in units of domestic currency per
unit of foreign currency:

    fwd_err[t]  = ln F_t - ln S_{t+1}      forward rate error
    spot_chg[t] = ln S_{t+1} - ln S_t      realized spot change
    fs_diff[t]  = ln F_t - ln S_t          forward premium/discount

so that fwd_err + spot_chg = fs_diff holds by construction.  N monthly rate
observations yield T = N - 1 aligned rows; the last forward quote is never
used.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ContinuityError,
    DomainError,
    InsufficientDataError,
    ParameterError,
    ParseError,
)

_MONTH_NAMES = {
    "jan": 1, "feb": 2, "mar": 3, "apr": 4, "may": 5, "jun": 6,
    "jul": 7, "aug": 8, "sep": 9, "oct": 10, "nov": 11, "dec": 12,
}


@dataclass(frozen=True, order=True)
class Month:
    """A calendar month. Ordering is chronological."""

    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise DomainError(f"month out of range: {self.month}")
        if not 1000 <= self.year <= 9999:
            raise DomainError(f"year out of range: {self.year}")

    @classmethod
    def parse(cls, text: str) -> "Month":
        """Parse 'YYYY-MM' or 'YYYY-MM-DD' (the day, if present, is dropped)."""
        parts = text.strip().split("-")
        if len(parts) not in (2, 3):
            raise ValueError(f"not a YYYY-MM date: {text!r}")
        return cls(int(parts[0]), int(parts[1]))

    def next(self) -> "Month":
        if self.month == 12:
            return Month(self.year + 1, 1)
        return Month(self.year, self.month + 1)

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


@dataclass(frozen=True)
class RateObservation:
    """End-of-month spot and 1-month forward quotes for one month."""

    date: Month
    spot: float
    forward_1m: float

    def __post_init__(self):
        for name, value in (("spot", self.spot), ("forward_1m", self.forward_1m)):
            if not math.isfinite(value) or value <= 0.0:
                raise DomainError(f"{name} must be a positive finite rate, got {value!r}")


@dataclass(frozen=True)
class AlignedSeries:
    """The three aligned log series. dates[t] is the month of F_t and S_t."""

    dates: tuple[Month, ...]
    fwd_err: np.ndarray
    spot_chg: np.ndarray
    fs_diff: np.ndarray

    def __post_init__(self):
        fe = np.asarray(self.fwd_err, dtype=float)
        sc = np.asarray(self.spot_chg, dtype=float)
        fs = np.asarray(self.fs_diff, dtype=float)
        if not (len(self.dates) == fe.shape[0] == sc.shape[0] == fs.shape[0]):
            raise ParameterError("aligned series components differ in length")
        if fe.ndim != 1:
            raise ParameterError("aligned series components must be 1-d")
        # fwd_err + spot_chg = fs_diff is an accounting identity of the logs
        if fe.shape[0] and np.max(np.abs(fe + sc - fs)) > 1e-12:
            raise ParameterError("fwd_err + spot_chg does not reproduce fs_diff")
        for arr, name in ((fe, "fwd_err"), (sc, "spot_chg"), (fs, "fs_diff")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def t_count(self) -> int:
        return len(self.dates)


_FORMATS = ("generic", "boe_export", "hkma_export")

# Whether the layout's quotes are foreign-per-domestic and must be
# inverted to the package orientation (domestic per foreign unit).
_DEFAULT_INVERT = {"generic": False, "boe_export": False, "hkma_export": True}


def _parse_generic_date(text: str, row: int) -> Month:
    try:
        return Month.parse(text)
    except (ValueError, DomainError) as exc:
        raise ParseError(f"bad date {text!r}: {exc}", row=row) from exc


def _parse_dmy_date(text: str, row: int) -> Month:
    """Dates exported as '31 Jan 2016' (day is dropped)."""
    parts = text.strip().replace(",", " ").split()
    if len(parts) == 3 and parts[1][:3].lower() in _MONTH_NAMES:
        try:
            return Month(int(parts[2]), _MONTH_NAMES[parts[1][:3].lower()])
        except (ValueError, DomainError) as exc:
            raise ParseError(f"bad date {text!r}: {exc}", row=row) from exc
    # some exports come through as ISO already
    try:
        return Month.parse(text)
    except (ValueError, DomainError) as exc:
        raise ParseError(f"bad date {text!r}", row=row) from exc


def _parse_month_year_date(text: str, row: int) -> Month:
    """Dates like '1998-01', 'Jan-1998' or 'Jan 1998'."""
    cleaned = text.strip().replace(",", " ")
    parts = cleaned.replace("-", " ").split()
    if len(parts) == 2 and parts[0][:3].lower() in _MONTH_NAMES:
        try:
            return Month(int(parts[1]), _MONTH_NAMES[parts[0][:3].lower()])
        except (ValueError, DomainError) as exc:
            raise ParseError(f"bad date {text!r}: {exc}", row=row) from exc
    try:
        return Month.parse(text)
    except (ValueError, DomainError) as exc:
        raise ParseError(f"bad date {text!r}", row=row) from exc


def _parse_rate(text: str, name: str, row: int) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise ParseError(f"bad {name} {text!r}", row=row) from exc
    if not math.isfinite(value) or value <= 0.0:
        raise DomainError(f"row {row}: {name} must be positive and finite, got {value!r}")
    return value


def ingest_csv(path: str | Path | io.TextIOBase,
               format: str = "generic",
               invert: bool | None = None) -> list[RateObservation]:
    """Read a monthly spot/forward CSV into a sorted, gap-free observation list.

    Parameters
    ----------
    path : file path or open text handle
    format : one of 'generic', 'boe_export', 'hkma_export'
        generic      -- header ``date,spot,forward``; dates YYYY-MM (an
                        optional day component is ignored).
        boe_export   -- central-bank database export: header row starting
                        with DATE, dates like '29 Feb 2016', then spot and
                        1-month forward columns.  Quotes are already
                        domestic-per-foreign.
        hkma_export  -- monthly bulletin export: month column ('1998-01' or
                        'Jan-1998'), then spot and 1-month forward quoted as
                        foreign currency per domestic unit; values are
                        inverted on ingest.
    invert : override the format's inversion default.  When True every spot
        and forward quote x is replaced by 1/x so that all downstream series
        are in domestic-per-foreign units.

    Raises
    ------
    ParseError          for malformed rows (carries the row number)
    DomainError         for non-positive or non-finite rates
    ContinuityError     for duplicated months or gaps in the monthly grid
    """
    if format not in _FORMATS:
        raise ParameterError(f"unknown format {format!r}; expected one of {_FORMATS}")
    if invert is None:
        invert = _DEFAULT_INVERT[format]

    if isinstance(path, (str, Path)):
        with open(path, "r", encoding="utf-8-sig", newline="") as handle:
            rows = list(csv.reader(handle))
    else:
        rows = list(csv.reader(path))

    # drop fully blank lines but keep the original row numbers for messages
    numbered = [(i + 1, row) for i, row in enumerate(rows)
                if any(cell.strip() for cell in row)]
    if not numbered:
        raise ParseError("empty file", row=1)

    header_row, header = numbered[0]
    header_norm = [cell.strip().lower().lstrip("﻿") for cell in header]
    if format == "generic":
        if header_norm[:3] != ["date", "spot", "forward"]:
            raise ParseError(
                f"expected header 'date,spot,forward', got {','.join(header)!r}",
                row=header_row)
        parse_date = _parse_generic_date
    elif format == "boe_export":
        if not header_norm or header_norm[0] != "date":
            raise ParseError(
                f"expected a DATE leading column, got {','.join(header)!r}",
                row=header_row)
        parse_date = _parse_dmy_date
    else:  # hkma_export
        if len(header_norm) < 3:
            raise ParseError("expected at least 3 columns", row=header_row)
        parse_date = _parse_month_year_date

    observations: list[RateObservation] = []
    for row_num, row in numbered[1:]:
        cells = [cell.strip() for cell in row]
        if len(cells) < 3:
            raise ParseError(f"expected 3 columns, got {len(cells)}", row=row_num)
        date = parse_date(cells[0], row_num)
        spot = _parse_rate(cells[1], "spot", row_num)
        forward = _parse_rate(cells[2], "forward", row_num)
        if invert:
            spot, forward = 1.0 / spot, 1.0 / forward
        observations.append(RateObservation(date=date, spot=spot, forward_1m=forward))

    observations.sort(key=lambda o: (o.date.year, o.date.month))
    for prev, curr in zip(observations, observations[1:]):
        if curr.date == prev.date:
            raise ContinuityError(f"duplicate month {prev.date}")
        expected = prev.date.next()
        if curr.date != expected:
            raise ContinuityError(f"missing month {expected}")
    return observations


def filter_observations(observations: Sequence[RateObservation],
                        start: Month | None = None,
                        end: Month | None = None) -> list[RateObservation]:
    """Restrict to start <= date <= end (inclusive on both sides)."""
    kept = [o for o in observations
            if (start is None or o.date >= start) and (end is None or o.date <= end)]
    return kept


def build_aligned(observations: Sequence[RateObservation]) -> AlignedSeries:
    """Turn N>=3 contiguous monthly observations into the T=N-1 aligned series."""
    n = len(observations)
    if n < 3:
        raise InsufficientDataError(f"need at least 3 monthly observations, got {n}")
    for prev, curr in zip(observations, observations[1:]):
        if curr.date != prev.date.next():
            raise ContinuityError(
                f"observations not contiguous: {prev.date} followed by {curr.date}")

    log_spot = np.log([o.spot for o in observations])
    log_fwd = np.log([o.forward_1m for o in observations])
    fwd_err = log_fwd[:-1] - log_spot[1:]
    spot_chg = log_spot[1:] - log_spot[:-1]
    fs_diff = log_fwd[:-1] - log_spot[:-1]
    dates = tuple(o.date for o in observations[:-1])
    return AlignedSeries(dates=dates, fwd_err=fwd_err, spot_chg=spot_chg, fs_diff=fs_diff)


def aligned_to_csv(series: AlignedSeries, path: str | Path | io.TextIOBase) -> None:
    """Write ``date,fwd_err,spot_chg,fs_diff`` with 10 significant digits."""
    def _write(handle):
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["date", "fwd_err", "spot_chg", "fs_diff"])
        for i, date in enumerate(series.dates):
            writer.writerow([
                str(date),
                format(series.fwd_err[i], ".10g"),
                format(series.spot_chg[i], ".10g"),
                format(series.fs_diff[i], ".10g"),
            ])

    if isinstance(path, (str, Path)):
        with open(path, "w", encoding="utf-8", newline="") as handle:
            _write(handle)
    else:
        _write(path)


def aligned_from_arrays(dates: Iterable[Month],
                        fwd_err: np.ndarray,
                        spot_chg: np.ndarray) -> AlignedSeries:
    """Assemble an AlignedSeries directly from component arrays (fs_diff is implied)."""
    fe = np.asarray(fwd_err, dtype=float)
    sc = np.asarray(spot_chg, dtype=float)
    return AlignedSeries(dates=tuple(dates), fwd_err=fe, spot_chg=sc, fs_diff=fe + sc)


def synthetic_months(count: int, start: Month = Month(1979, 1)) -> tuple[Month, ...]:
    """A contiguous run of months, handy for simulated datasets."""
    months = []
    current = start
    for _ in range(count):
        months.append(current)
        current = current.next()
    return tuple(months)


def rates_from_components(fwd_err, spot_chg,
                          log_spot0: float = 0.47,
                          start: Month = Month(1979, 1)) -> list[RateObservation]:
    """Reconstruct T+1 monthly rate levels from T aligned log components.

    Inverts the aligned-series construction: spot levels follow the
    cumulated spot changes from exp(log_spot0), and each forward is the
    next spot times exp(fwd_err). The final month needs a forward column
    to parse as a valid observation but its value is never used; the spot
    is repeated there.
    """
    fe = np.asarray(fwd_err, dtype=float)
    sc = np.asarray(spot_chg, dtype=float)
    if fe.shape != sc.shape or fe.ndim != 1 or fe.shape[0] < 2:
        raise ParameterError("component arrays must be equal-length 1-d with T >= 2")
    log_spot = np.concatenate([[log_spot0], log_spot0 + np.cumsum(sc)])
    log_fwd = fe + log_spot[1:]
    months = synthetic_months(fe.shape[0] + 1, start)
    observations = [
        RateObservation(date=months[t], spot=float(np.exp(log_spot[t])),
                        forward_1m=float(np.exp(log_fwd[t])))
        for t in range(fe.shape[0])
    ]
    last_spot = float(np.exp(log_spot[-1]))
    observations.append(RateObservation(date=months[-1], spot=last_spot,
                                        forward_1m=last_spot))
    return observations

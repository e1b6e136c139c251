"""File-based ingestion of monthly macro series and standard transforms.

Input files are two-column CSVs (date, value) with a header row, the shape
FRED exports use.  Dates parse as ``YYYY-MM`` or ``YYYY-MM-DD``; series must
be gap-free (a missing month raises rather than silently interpolating,
since imputation would corrupt the lag structure downstream).
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass

import numpy as np

from .errors import GapError, NonPositiveValue, ParseError, SpanMismatch
from .model import SeriesBundle

__all__ = [
    "MonthlySeries",
    "load_csv_series",
    "log_diff_annualized",
    "build_application_design",
]

_DATE_RE = re.compile(r"^(\d{4})-(\d{2})(?:-\d{2})?$")


def _month_index(year: int, month: int) -> int:
    return year * 12 + (month - 1)


def _month_label(index: int) -> str:
    return f"{index // 12:04d}-{index % 12 + 1:02d}"


@dataclass(frozen=True)
class MonthlySeries:
    """A named, gap-free monthly series.

    ``start`` is the first month as ``YYYY-MM``; ``values[k]`` belongs to
    ``start + k`` months.
    """

    name: str
    start: str
    values: np.ndarray

    def __post_init__(self):
        m = _DATE_RE.match(self.start)
        if m is None:
            raise ParseError(f"bad start month {self.start!r}")
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size == 0:
            raise ParseError("a series needs at least one observation")

    @property
    def start_index(self) -> int:
        year, month = (int(p) for p in self.start.split("-"))
        return _month_index(year, month)

    @property
    def months(self) -> list[str]:
        return [_month_label(self.start_index + k) for k in range(len(self.values))]

    def observations(self) -> list[tuple[str, float]]:
        return list(zip(self.months, self.values.tolist()))


def load_csv_series(path, value_col: str | None = None, date_col: str | None = None) -> MonthlySeries:
    """Load one monthly series from a two-column CSV.

    By default the first column is the date and the second the value; pass
    column names to override.  The series name is the value column's header.

    Raises
    ------
    ParseError
        Unparseable date or non-numeric value, reported with its row number.
    GapError
        A missing month, reported by name.
    """
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", row=1) from None
        header = [h.strip() for h in header]
        if len(header) < 2:
            raise ParseError(f"need at least two columns, got {header}", row=1)
        date_pos = header.index(date_col) if date_col else 0
        value_pos = header.index(value_col) if value_col else 1

        indices: list[int] = []
        values: list[float] = []
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                date_cell = row[date_pos].strip()
                value_cell = row[value_pos].strip()
            except IndexError:
                raise ParseError(f"short row {row}", row=row_no) from None
            m = _DATE_RE.match(date_cell)
            if m is None:
                raise ParseError(f"unparseable date {date_cell!r}", row=row_no)
            try:
                value = float(value_cell)
            except ValueError:
                raise ParseError(f"non-numeric value {value_cell!r}", row=row_no) from None
            indices.append(_month_index(int(m.group(1)), int(m.group(2))))
            values.append(value)

    if not values:
        raise ParseError("no data rows", row=2)
    for prev, curr in zip(indices, indices[1:]):
        if curr == prev + 1:
            continue
        if curr <= prev:
            raise ParseError(f"months out of order near {_month_label(curr)}")
        raise GapError(
            f"series is missing {_month_label(prev + 1)}",
            missing_month=_month_label(prev + 1),
        )
    return MonthlySeries(name=header[value_pos], start=_month_label(indices[0]), values=np.array(values))


def log_diff_annualized(series: MonthlySeries) -> MonthlySeries:
    """Annualized month-over-month percentage change: ``1200 * diff(log)``.

    The output starts one month later and is one observation shorter.
    """
    if np.any(series.values <= 0):
        bad = int(np.argmax(series.values <= 0))
        raise NonPositiveValue(
            f"{series.name} has value {series.values[bad]} at {series.months[bad]}; "
            "log-differences need strictly positive levels"
        )
    out = 1200.0 * np.diff(np.log(series.values))
    return MonthlySeries(
        name=series.name,
        start=_month_label(series.start_index + 1),
        values=out,
    )


def align_series(series: list[MonthlySeries]) -> tuple[str, np.ndarray]:
    """Trim a set of series to their common span.

    Returns the common start month and a matrix with one column per input
    series, in input order.
    """
    start = max(s.start_index for s in series)
    stop = min(s.start_index + len(s.values) for s in series)
    if stop <= start:
        spans = {s.name: (s.start, s.months[-1]) for s in series}
        raise SpanMismatch(f"series spans share no common months: {spans}")
    cols = [s.values[start - s.start_index : stop - s.start_index] for s in series]
    return _month_label(start), np.column_stack(cols)


@dataclass(frozen=True)
class ApplicationInputs:
    """Design-builder inputs assembled from observed monthly series."""

    bundle: SeriesBundle
    start_month: str
    lags: int


def build_application_design(
    series: dict[str, MonthlySeries],
    response: str,
    shock: str,
    lags: int = 4,
    trend: bool = True,
) -> ApplicationInputs:
    """Regressor bundle for an observed-data run.

    The bundle holds the shock contemporaneously, an intercept, an optional
    linear trend, and ``lags`` lags of the response, the shock, and every
    other series.  All series are first trimmed to their common span; the
    returned record labels the first aligned month and carries the lag
    count for the design builder.
    """
    if response not in series:
        raise SpanMismatch(f"response {response!r} not among series {sorted(series)}")
    if shock not in series:
        raise SpanMismatch(f"shock {shock!r} not among series {sorted(series)}")
    names = [response, shock] + sorted(k for k in series if k not in (response, shock))
    start, matrix = align_series([series[n] for n in names])
    controls = {name: matrix[:, i] for i, name in enumerate(names[2:], start=2)}
    bundle = SeriesBundle(
        y=matrix[:, 0],
        z=matrix[:, 1],
        controls=controls,
        trend=trend,
    )
    return ApplicationInputs(bundle=bundle, start_month=start, lags=lags)

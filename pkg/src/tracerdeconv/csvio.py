"""Column-oriented curve tables and their CSV form.

Files are UTF-8, comma separated, with a mandatory header whose first
column is ``t`` (seconds). Floats are written with ``repr`` so a
save/load cycle is lossless.
"""

from __future__ import annotations

import csv
import math

import numpy as np

from .errors import CsvFormatError
from .signals import TimeGrid, TimeSeries


class CurveRecord:
    """Ordered named columns of equal length, the first being ``t``."""

    def __init__(self, columns: dict):
        cols = {str(k): np.asarray(v, dtype=np.float64).reshape(-1) for k, v in columns.items()}
        if not cols or next(iter(cols)) != "t":
            raise CsvFormatError("first column must be 't'")
        lengths = {name: c.shape[0] for name, c in cols.items()}
        if len(set(lengths.values())) != 1:
            raise CsvFormatError(f"columns have different lengths: {lengths}")
        for name, c in cols.items():
            if not np.all(np.isfinite(c)):
                row = int(np.flatnonzero(~np.isfinite(c))[0])
                raise CsvFormatError(f"non-finite value in column {name!r}, row {row}")
        self._cols = cols

    @classmethod
    def from_series(cls, t=None, **series: TimeSeries) -> "CurveRecord":
        if t is None:
            t = next(iter(series.values())).t
        return cls({"t": t, **{k: np.asarray(v) for k, v in series.items()}})

    @property
    def names(self) -> list:
        return list(self._cols)

    @property
    def t(self) -> np.ndarray:
        return self._cols["t"]

    def __len__(self):
        return self.t.shape[0]

    def __contains__(self, name):
        return name in self._cols

    def __getitem__(self, name) -> np.ndarray:
        return self._cols[name]

    def __eq__(self, other):
        if not isinstance(other, CurveRecord) or self.names != other.names:
            return NotImplemented if not isinstance(other, CurveRecord) else False
        return all(np.array_equal(self[k], other[k]) for k in self.names)

    def grid(self, rtol: float = 1e-6) -> TimeGrid:
        """The uniform grid implied by ``t``; raises if spacing is not uniform."""
        t = self.t
        if t.shape[0] < 2:
            raise CsvFormatError("need at least two time samples")
        steps = np.diff(t)
        dt = float(np.mean(steps))
        if dt <= 0 or np.max(np.abs(steps - dt)) > rtol * abs(dt) + 1e-12:
            raise CsvFormatError("time column is not uniformly increasing")
        return TimeGrid(float(t[0]), dt, t.shape[0])

    def series(self, name: str) -> TimeSeries:
        if name not in self._cols:
            raise CsvFormatError(f"missing column {name!r}; have {self.names}")
        return TimeSeries(self.grid(), self._cols[name])

    def with_columns(self, **columns) -> "CurveRecord":
        merged = dict(self._cols)
        merged.update({k: np.asarray(v) for k, v in columns.items()})
        return CurveRecord(merged)


def save_csv(record: CurveRecord, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(record.names)
        cols = [record[name] for name in record.names]
        for row in zip(*cols):
            w.writerow([repr(float(x)) for x in row])


def load_csv(path) -> CurveRecord:
    """Read a curve CSV; parse errors name the offending line and column."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if not header or header[0] != "t":
            raise CsvFormatError(f"{path}: line 1: first column must be 't', got {header[:1]}")
        if len(set(header)) != len(header):
            raise CsvFormatError(f"{path}: line 1: duplicate column names")
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CsvFormatError(
                    f"{path}: line {line}: expected {len(header)} fields, got {len(row)}"
                )
            values = []
            for name, cell in zip(header, row):
                try:
                    x = float(cell)
                except ValueError:
                    raise CsvFormatError(
                        f"{path}: line {line}, column {name!r}: not a number: {cell!r}"
                    ) from None
                if not math.isfinite(x):
                    raise CsvFormatError(
                        f"{path}: line {line}, column {name!r}: non-finite value {cell!r}"
                    )
                values.append(x)
            rows.append(values)
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    data = np.array(rows, dtype=np.float64)
    return CurveRecord({name: data[:, i] for i, name in enumerate(header)})


def save_table(rows: list, path) -> None:
    """Write a list of flat dicts (same keys) as CSV. Used for study summaries."""
    if not rows:
        raise ValueError("no rows to write")
    names = list(rows[0])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=names, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in r.items()})

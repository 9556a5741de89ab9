"""Multivariate time series containers, CSV ingestion and preprocessing."""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError, ParseError, ShapeError

__all__ = [
    "MTSeries",
    "Dataset",
    "load_csv",
    "write_csv",
    "log_difference",
    "standardize",
]


@dataclass(frozen=True, eq=False)
class MTSeries:
    """A single d-variate series observed at T consecutive time points.

    ``values`` has shape ``(T, d)``: rows are time, columns are components.
    The array is copied and frozen on construction.
    """

    values: np.ndarray
    id: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ShapeError(f"series values must be 2-D (T, d), got ndim={values.ndim}")
        T, d = values.shape
        if T < 2 or d < 1:
            raise ShapeError(f"series needs T >= 2 and d >= 1, got T={T}, d={d}")
        if not np.all(np.isfinite(values)):
            t, j = np.argwhere(~np.isfinite(values))[0]
            raise DomainError(f"non-finite value at t={t + 1}, component {j + 1}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "id", str(self.id))

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        if not isinstance(other, MTSeries):
            return NotImplemented
        return self.id == other.id and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.id, self.values.shape, self.values.tobytes()))

    def __repr__(self):
        return f"MTSeries(id={self.id!r}, T={self.T}, d={self.d})"


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of series sharing the same dimension d."""

    series: tuple = field(default_factory=tuple)

    def __post_init__(self):
        series = tuple(self.series)
        if not series:
            raise ShapeError("a dataset needs at least one series")
        dims = {s.d for s in series}
        if len(dims) != 1:
            raise ShapeError(f"inconsistent dimensions across series: {sorted(dims)}")
        object.__setattr__(self, "series", series)

    def __len__(self):
        return len(self.series)

    def __iter__(self):
        return iter(self.series)

    def __getitem__(self, i):
        return self.series[i]

    @property
    def n(self) -> int:
        return len(self.series)

    @property
    def d(self) -> int:
        return self.series[0].d

    @property
    def ids(self) -> list:
        return [s.id for s in self.series]

    def common_length(self) -> int:
        """Return the shared series length, raising if lengths differ."""
        lengths = {s.T for s in self.series}
        if len(lengths) != 1:
            raise ShapeError(f"series lengths differ: {sorted(lengths)}")
        return lengths.pop()

    def map(self, func) -> "Dataset":
        return Dataset(tuple(func(s) for s in self.series))


def _parse_float(text, row, column):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ParseError(f"non-numeric value {text!r} in column {column!r}", row) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {text!r} in column {column!r}", row)
    return value


def _parse_int(text, row, column):
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ParseError(f"non-integer value {text!r} in column {column!r}", row) from None


def load_csv(path, layout: str = "wide") -> Dataset:
    """Read a dataset from CSV.

    Parameters
    ----------
    path : str or Path
        UTF-8 CSV file. LF and CRLF line endings are both accepted.
    layout : {"wide", "long"}
        ``wide``: header ``series_id,t,<c1>,...,<cd>``, one row per time
        point. ``long``: header ``series_id,t,component,value``, one row per
        observation; components are ordered lexicographically by name.

    Returns
    -------
    Dataset
        Series in order of first appearance.

    Raises
    ------
    ParseError
        On missing cells, non-numeric values, duplicate ``(series_id, t)``
        pairs, gaps in ``t`` or inconsistent dimensions. Row numbers count
        data rows from 1 (the header is not counted).
    """
    if layout not in ("wide", "long"):
        raise ParseError(f"unknown layout {layout!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file") from None
        rows = list(reader)

    if layout == "wide":
        if len(header) < 3 or header[:2] != ["series_id", "t"]:
            raise ParseError("wide header must start with series_id,t followed by components")
        return _load_wide(header, rows)
    if header != ["series_id", "t", "component", "value"]:
        raise ParseError("long header must be series_id,t,component,value")
    return _load_long(rows)


def _check_cells(cells, width, row):
    if len(cells) != width:
        raise ParseError(f"expected {width} cells, found {len(cells)}", row)
    for name_idx, cell in enumerate(cells):
        if cell.strip() == "":
            raise ParseError(f"missing cell in column {name_idx + 1}", row)


def _load_wide(header, rows):
    components = header[2:]
    order = []
    data = {}
    first_row = {}
    for row, cells in enumerate(rows, start=1):
        if not cells:
            continue
        _check_cells(cells, len(header), row)
        sid = cells[0].strip()
        t = _parse_int(cells[1], row, "t")
        values = [_parse_float(c, row, name) for c, name in zip(cells[2:], components)]
        if sid not in data:
            order.append(sid)
            data[sid] = {}
            first_row[sid] = row
        if t in data[sid]:
            raise ParseError(f"duplicate (series_id, t) = ({sid}, {t})", row)
        data[sid][t] = (values, row)
    return _assemble(order, data, first_row)


def _load_long(rows):
    order = []
    data = {}
    first_row = {}
    names = set()
    for row, cells in enumerate(rows, start=1):
        if not cells:
            continue
        _check_cells(cells, 4, row)
        sid = cells[0].strip()
        t = _parse_int(cells[1], row, "t")
        comp = cells[2].strip()
        value = _parse_float(cells[3], row, "value")
        if sid not in data:
            order.append(sid)
            data[sid] = {}
            first_row[sid] = row
        slot = data[sid].setdefault(t, ({}, row))
        if comp in slot[0]:
            raise ParseError(f"duplicate (series_id, t, component) = ({sid}, {t}, {comp})", row)
        slot[0][comp] = value
        names.add(comp)

    components = sorted(names)
    wide = {}
    for sid in order:
        wide[sid] = {}
        for t, (by_name, row) in data[sid].items():
            missing = [c for c in components if c not in by_name]
            if missing:
                raise ParseError(f"series {sid!r} at t={t} lacks components {missing}", row)
            wide[sid][t] = ([by_name[c] for c in components], row)
    return _assemble(order, wide, first_row)


def _assemble(order, data, first_row):
    if not order:
        raise ParseError("no data rows")
    series = []
    d = None
    for sid in order:
        by_t = data[sid]
        ts = sorted(by_t)
        if ts != list(range(1, len(ts) + 1)):
            raise ParseError(
                f"series {sid!r}: t must be consecutive integers starting at 1", first_row[sid]
            )
        values = np.array([by_t[t][0] for t in ts], dtype=float)
        if d is None:
            d = values.shape[1]
        elif values.shape[1] != d:
            raise ParseError(f"series {sid!r} has d={values.shape[1]}, expected {d}", first_row[sid])
        try:
            series.append(MTSeries(values, sid))
        except (ShapeError, DomainError) as exc:
            raise ParseError(f"series {sid!r}: {exc}", first_row[sid]) from None
    return Dataset(tuple(series))


def write_csv(dataset: Dataset, path, layout: str = "wide", component_names: Sequence[str] = None):
    """Write ``dataset`` in the format read by :func:`load_csv`.

    Values are written with ``repr`` so that doubles round-trip exactly.
    """
    if layout not in ("wide", "long"):
        raise ParseError(f"unknown layout {layout!r}")
    d = dataset.d
    names = list(component_names) if component_names else [f"c{j + 1}" for j in range(d)]
    if len(names) != d:
        raise ShapeError(f"{len(names)} component names for d={d}")
    if layout == "long" and names != sorted(names):
        # long layout reorders components lexicographically on read
        raise ShapeError("long layout requires lexicographically ordered component names")
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if layout == "wide":
            writer.writerow(["series_id", "t", *names])
            for s in dataset:
                for t, row in enumerate(s.values, start=1):
                    writer.writerow([s.id, t, *(repr(float(v)) for v in row)])
        else:
            writer.writerow(["series_id", "t", "component", "value"])
            for s in dataset:
                for t, row in enumerate(s.values, start=1):
                    for name, v in zip(names, row):
                        writer.writerow([s.id, t, name, repr(float(v))])


def log_difference(series: MTSeries) -> MTSeries:
    """First differences of the natural logarithm, componentwise.

    Entry ``(t, j)`` of the result is ``ln x[t+1, j] - ln x[t, j]``; the
    result is one observation shorter.
    """
    x = series.values
    bad = np.argwhere(x <= 0)
    if bad.size:
        t, j = bad[0]
        raise DomainError(f"log-difference needs positive values; x[t={t + 1}, j={j + 1}] = {x[t, j]}")
    return MTSeries(np.diff(np.log(x), axis=0), series.id)


def standardize(series: MTSeries) -> MTSeries:
    """Center each component and scale it to unit sample variance (ddof=1)."""
    x = series.values
    sd = x.std(axis=0, ddof=1)
    zero = np.flatnonzero(sd == 0)
    if zero.size:
        raise DomainError(f"component j={zero[0] + 1} has zero variance")
    z = (x - x.mean(axis=0)) / sd
    # second centering pass removes the rounding left by the first
    z -= z.mean(axis=0)
    return MTSeries(z / z.std(axis=0, ddof=1), series.id)

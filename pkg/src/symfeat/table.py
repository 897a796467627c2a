"""Feature tables: key columns plus a float matrix, with an exact CSV round trip."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

KEY_COLUMNS = ("file_id", "window_start", "window_end")


class TableError(ValueError):
    """Malformed table input or an invalid table operation."""


@dataclass
class FeatureTable:
    """Rows keyed by (file_id, window_start, window_end); one float column per feature."""

    columns: list[str]
    file_ids: list[str] = field(default_factory=list)
    window_starts: list[int] = field(default_factory=list)
    window_ends: list[int] = field(default_factory=list)
    values: np.ndarray = None

    def __post_init__(self):
        self.columns = list(self.columns)
        if self.values is None:
            self.values = np.zeros((len(self.file_ids), len(self.columns)))
        self.values = np.asarray(self.values, dtype=float).reshape(len(self.file_ids),
                                                                   len(self.columns))
        if not (len(self.file_ids) == len(self.window_starts) == len(self.window_ends)):
            raise TableError("key columns have different lengths")
        if len(set(self.columns)) != len(self.columns):
            raise TableError("duplicate column names")
        if set(self.columns) & set(KEY_COLUMNS):
            raise TableError("feature columns may not reuse key column names")

    @classmethod
    def from_rows(cls, rows: Iterable, columns: Sequence[str]) -> "FeatureTable":
        """Build from :class:`~symfeat.engine.FeatureRow` objects."""
        rows = list(rows)
        values = np.array([[r.values[c] for c in columns] for r in rows], dtype=float)
        return cls(list(columns), [r.file_id for r in rows], [r.window_start for r in rows],
                   [r.window_end for r in rows], values.reshape(len(rows), len(columns)))

    def __len__(self) -> int:
        return len(self.file_ids)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def keys(self) -> list[tuple[str, int, int]]:
        return list(zip(self.file_ids, self.window_starts, self.window_ends))

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def take_rows(self, idx) -> "FeatureTable":
        idx = list(idx)
        return FeatureTable(self.columns, [self.file_ids[i] for i in idx],
                            [self.window_starts[i] for i in idx],
                            [self.window_ends[i] for i in idx], self.values[idx, :])

    def take_columns(self, names: Sequence[str]) -> "FeatureTable":
        pos = [self.columns.index(n) for n in names]
        return FeatureTable(list(names), list(self.file_ids), list(self.window_starts),
                            list(self.window_ends), self.values[:, pos])

    def sorted_columns(self) -> "FeatureTable":
        return self.take_columns(sorted(self.columns))

    def equals(self, other: "FeatureTable") -> bool:
        """Exact equality with NaN == NaN."""
        return (self.columns == other.columns and self.keys() == other.keys()
                and self.values.shape == other.values.shape
                and bool(np.array_equal(self.values, other.values, equal_nan=True)))


def format_float(x: float) -> str:
    if np.isnan(x):
        return ""
    return f"{x:.17g}"


def to_csv_text(table: FeatureTable) -> str:
    buf = io.StringIO()
    t = table.sorted_columns()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(list(KEY_COLUMNS) + t.columns)
    for i, (fid, ws, we) in enumerate(t.keys()):
        writer.writerow([fid, ws, we] + [format_float(v) for v in t.values[i]])
    return buf.getvalue()


def write_csv(table: FeatureTable, out) -> None:
    """UTF-8, RFC 4180 quoting, 17 significant digits, NaN as an empty field."""
    Path(out).write_bytes(to_csv_text(table).encode("utf-8"))


def read_csv(path) -> FeatureTable:
    text = Path(path).read_bytes().decode("utf-8")
    return parse_csv_text(text)


def parse_csv_text(text: str) -> FeatureTable:
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise TableError("empty CSV file (no header)") from None
    if tuple(header[:3]) != KEY_COLUMNS:
        raise TableError(f"CSV header must start with {', '.join(KEY_COLUMNS)}")
    columns = header[3:]
    ids, starts, ends, rows = [], [], [], []
    for row in reader:
        lineno = reader.line_num
        if not row:
            continue
        if len(row) != len(header):
            raise TableError(f"line {lineno}: expected {len(header)} fields, found {len(row)}")
        try:
            starts.append(int(row[1]))
            ends.append(int(row[2]))
            rows.append([float(v) if v != "" else np.nan for v in row[3:]])
        except ValueError as exc:
            raise TableError(f"line {lineno}: {exc}") from exc
        ids.append(row[0])
    values = np.array(rows, dtype=float).reshape(len(ids), len(columns))
    return FeatureTable(columns, ids, starts, ends, values)

"""Table post-processing: NaN row/column filtering, substitution, dropping and merging."""

from __future__ import annotations

import fnmatch
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .table import KEY_COLUMNS, FeatureTable, TableError

log = logging.getLogger(__name__)

ROW_FILTER_RATIO = 0.1
QUANTILE = 0.99
REDUCERS = ("sum", "mean", "max")


@dataclass
class NanFilterReport:
    r: float
    n: list = field(default_factory=list)
    q99: float = float("nan")
    threshold: float = float("nan")
    rows_removed: list = field(default_factory=list)
    columns_removed: list = field(default_factory=list)
    row_filter_ran: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("q99", "threshold"):
            if np.isnan(d[k]):
                d[k] = None
        return d


def nearest_rank_q99(counts) -> int:
    """Value at 1-based rank ceil(0.99 R) of the ascending counts."""
    s = sorted(int(c) for c in counts)
    rank = (99 * len(s) + 99) // 100  # ceil(0.99 R) in integers
    return s[rank - 1]


def nan_filter(table: FeatureTable, drop_columns: bool = True
               ) -> tuple[FeatureTable, NanFilterReport]:
    """Remove NaN-heavy rows (only when few columns are clean), then NaN columns.

    ``r`` divides clean columns by rows, exactly as the heuristic is stated.
    With ``drop_columns=False`` the column step is skipped and NaNs may remain.
    """
    R = len(table)
    if R == 0:
        raise TableError("empty_table: nan_filter needs at least one row")
    nan = np.isnan(table.values)
    n_i = nan.sum(axis=1)
    c_clean = int((~nan.any(axis=0)).sum())
    report = NanFilterReport(r=c_clean / R, n=[int(v) for v in n_i])

    keep = np.ones(R, dtype=bool)
    if report.r < ROW_FILTER_RATIO:
        report.row_filter_ran = True
        report.q99 = float(nearest_rank_q99(n_i))
        report.threshold = report.q99 / QUANTILE
        keep = n_i <= report.threshold
        report.rows_removed = [int(i) for i in np.flatnonzero(~keep)]
    out = table.take_rows(np.flatnonzero(keep))

    if drop_columns:
        bad = np.isnan(out.values).any(axis=0)
        report.columns_removed = [c for c, b in zip(out.columns, bad) if b]
        out = out.take_columns([c for c, b in zip(out.columns, bad) if not b])
    return out, report


def _match(table: FeatureTable, pattern: str) -> list[str]:
    return [c for c in table.columns if fnmatch.fnmatchcase(c, pattern)]


def replace_values(table: FeatureTable, column_pattern: str, replacement: float) -> FeatureTable:
    cols = _match(table, column_pattern)
    if not cols:
        raise TableError(f"pattern {column_pattern!r} matches no column")
    values = table.values.copy()
    for c in cols:
        j = table.columns.index(c)
        col = values[:, j]
        col[np.isnan(col)] = replacement
    return FeatureTable(table.columns, list(table.file_ids), list(table.window_starts),
                        list(table.window_ends), values)


def merge_columns(table: FeatureTable, sources, dest: str, reducer: str = "sum") -> FeatureTable:
    """Replace ``sources`` with one ``dest`` column; NaN in any source gives NaN."""
    sources = list(sources)
    if reducer not in REDUCERS:
        raise TableError(f"reducer must be one of {REDUCERS}")
    if len(sources) < 2:
        raise TableError("merge needs at least two source columns")
    missing = [s for s in sources if s not in table.columns]
    if missing:
        raise TableError(f"missing source columns: {missing}")
    if dest in KEY_COLUMNS or (dest in table.columns and dest not in sources):
        raise TableError(f"destination column {dest!r} already exists")
    block = table.values[:, [table.columns.index(s) for s in sources]]
    merged = getattr(np, reducer)(block, axis=1)  # plain reducers propagate NaN
    kept = [c for c in table.columns if c not in sources]
    rest = table.take_columns(kept)
    return FeatureTable(kept + [dest], rest.file_ids, rest.window_starts, rest.window_ends,
                        np.column_stack([rest.values, merged]) if len(table) else
                        np.zeros((0, len(kept) + 1)))


def drop_columns(table: FeatureTable, column_pattern: str) -> FeatureTable:
    if any(fnmatch.fnmatchcase(k, column_pattern) for k in KEY_COLUMNS):
        raise TableError(f"pattern {column_pattern!r} matches a key column")
    cols = set(_match(table, column_pattern))
    if not cols:
        log.warning("drop pattern %r matches no column", column_pattern)
        return table
    return table.take_columns([c for c in table.columns if c not in cols])

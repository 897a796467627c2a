"""Harmonic-annotation sidecar reader (``.tsv`` with measure, beat, label, localkey)."""

from __future__ import annotations

import csv
import io
from fractions import Fraction

from ..score import HarmonicAnnotation
from .common import ParseError, decode_text

COLUMNS = ("measure", "beat", "label", "localkey")


def parse_annotations(text, path: str = "") -> list[HarmonicAnnotation]:
    """Read a tab-separated annotation sidecar, returned sorted by (measure, beat)."""
    if isinstance(text, (bytes, bytearray)):
        text = decode_text(bytes(text))
    rows = list(csv.reader(io.StringIO(text), delimiter="\t"))
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows:
        raise ParseError(path, "malformed_header", "empty annotation file")
    header = [c.strip().lower() for c in rows[0]]
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise ParseError(path, "malformed_header", f"missing columns {missing}", 1)
    col = {c: header.index(c) for c in COLUMNS}
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) < len(header):
            raise ParseError(path, "malformed_event",
                             f"expected {len(header)} columns, found {len(row)}", lineno)
        try:
            measure = int(row[col["measure"]])
            beat = Fraction(row[col["beat"]].strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(path, "malformed_event", f"non-numeric position: {exc}", lineno) from exc
        label = row[col["label"]].strip()
        if measure < 1 or beat < 0 or not label:
            raise ParseError(path, "malformed_event", "invalid measure, beat or empty label", lineno)
        out.append(HarmonicAnnotation(measure, beat, label, row[col["localkey"]].strip()))
    out.sort(key=lambda a: (a.measure_index, a.beat))
    return out

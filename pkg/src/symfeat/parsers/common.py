from __future__ import annotations

from fractions import Fraction
from typing import Optional

from ..score import NoteEvent, ScoreValidationError

PARSER_VERSION = "1.0"

ERROR_KINDS = ("io", "malformed_header", "malformed_event", "unsupported_construct", "encoding")

TEMPO_WORDS = {
    # rough quarter-note bpm for common Italian tempo designations
    "grave": 40, "largo": 50, "larghetto": 60, "lento": 55, "adagio": 70,
    "adagietto": 75, "andante": 90, "andantino": 95, "moderato": 110,
    "allegretto": 115, "allegro": 130, "vivace": 150, "presto": 170,
    "prestissimo": 200,
}


class ParseError(Exception):
    """Per-file parse failure. Only ``kind == "io"`` is worth retrying."""

    def __init__(self, path: str, kind: str, detail: str,
                 byte_or_line: Optional[int] = None):
        if kind not in ERROR_KINDS:
            raise ValueError(f"unknown ParseError kind {kind!r}")
        super().__init__(f"{path}: {kind}: {detail}"
                         + (f" (at {byte_or_line})" if byte_or_line is not None else ""))
        self.path = path
        self.kind = kind
        self.detail = detail
        self.byte_or_line = byte_or_line

    @property
    def retryable(self) -> bool:
        return self.kind == "io"

    def to_dict(self) -> dict:
        return {"path": self.path, "kind": self.kind, "detail": self.detail,
                "byte_or_line": self.byte_or_line}

    def __reduce__(self):
        return (ParseError, (self.path, self.kind, self.detail, self.byte_or_line))


def decode_text(data: bytes) -> str:
    if isinstance(data, str):
        return data
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError:
        return data.decode("latin-1")


def tempo_from_words(text: str) -> Optional[float]:
    for word in text.lower().replace(",", " ").replace(".", " ").split():
        if word in TEMPO_WORDS:
            return float(TEMPO_WORDS[word])
    return None


class TiedNote:
    """Mutable note under construction, used by the notation parsers for tie merging."""

    __slots__ = ("onset", "duration", "pitch", "measure", "spelled", "grace",
                 "tie_start", "tie_stop")

    def __init__(self, onset, duration, pitch, measure, spelled=None, grace=False,
                 tie_start=False, tie_stop=False):
        self.onset = onset
        self.duration = duration
        self.pitch = pitch
        self.measure = measure
        self.spelled = spelled
        self.grace = grace
        self.tie_start = tie_start
        self.tie_stop = tie_stop


def merge_ties(raw: list[TiedNote]) -> list[NoteEvent]:
    """Collapse tie chains into single events.

    A continuation (``tie_stop``) extends the open chain of the same pitch
    that ends exactly at its onset. A chain still open at the end of the part
    keeps ``tie_to_next=True``; merged chains do not.
    """
    raw = sorted(raw, key=lambda n: (n.onset, n.pitch))
    open_chain: dict[int, TiedNote] = {}
    out: list[TiedNote] = []
    for n in raw:
        if n.grace:
            out.append(n)
            continue
        head = open_chain.pop(n.pitch, None) if n.tie_stop else None
        if head is not None and head.onset + head.duration == n.onset:
            head.duration += n.duration
            if n.tie_start:
                open_chain[n.pitch] = head
            else:
                head.tie_start = False
            continue
        if n.tie_start:
            open_chain[n.pitch] = n
        out.append(n)
    return [
        NoteEvent(Fraction(n.onset), Fraction(n.duration), n.pitch, n.measure,
                  n.spelled, None, n.grace, bool(n.tie_start and not n.grace))
        for n in out
    ]


def check_pitch(pitch: int, path: str, where=None) -> int:
    if not 0 <= pitch <= 127:
        raise ParseError(path, "malformed_event", f"pitch {pitch} outside 0-127", where)
    return pitch


def wrap_validation(path: str, exc: ScoreValidationError) -> ParseError:
    return ParseError(path, "malformed_event", f"invalid score: {exc}")

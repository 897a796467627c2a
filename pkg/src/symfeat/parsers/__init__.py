"""Parsers turning MIDI, MusicXML and **kern bytes into :class:`~symfeat.score.Score` values."""

from __future__ import annotations

import os

from ..score import Score
from .annotations import parse_annotations
from .common import PARSER_VERSION, ParseError
from .kern import parse_kern
from .midi import parse_midi
from .musicxml import parse_musicxml

EXTENSIONS = {
    ".mid": "midi", ".midi": "midi",
    ".xml": "musicxml", ".musicxml": "musicxml", ".mxl": "musicxml",
    ".krn": "kern",
}

_PARSERS = {"midi": parse_midi, "musicxml": parse_musicxml, "kern": parse_kern}


def format_for_path(path) -> str | None:
    return EXTENSIONS.get(os.path.splitext(str(path))[1].lower())


def parse_bytes(data: bytes, fmt: str, path: str = "") -> Score:
    """Dispatch to the parser for ``fmt``; any unexpected failure becomes a :class:`ParseError`."""
    try:
        parser = _PARSERS[fmt]
    except KeyError:
        raise ParseError(path, "unsupported_construct", f"unknown format {fmt!r}") from None
    try:
        return parser(data, path)
    except ParseError:
        raise
    except RecursionError as exc:
        raise ParseError(path, "malformed_event", "structure too deeply nested") from exc
    except (ValueError, TypeError, KeyError, IndexError, OverflowError, ZeroDivisionError) as exc:
        raise ParseError(path, "malformed_event", f"{type(exc).__name__}: {exc}") from exc


__all__ = [
    "EXTENSIONS", "PARSER_VERSION", "ParseError", "format_for_path", "parse_annotations",
    "parse_bytes", "parse_kern", "parse_midi", "parse_musicxml",
]

"""Content-addressed on-disk cache of parsed scores.

Entries live at ``<dir>/<hh>/<sha256 hex>-<parser_version>.nfsc``. The payload
is a closed, versioned binary record::

    "NFSC" | u16 format version | sections... | "END_" section with CRC32

Each section is a 4-byte tag, a u32 byte length and its body. Anything that
does not decode cleanly is treated as a miss and the file is removed.
"""

from __future__ import annotations

import hashlib
import logging
import os
import re
import shutil
import struct
import tempfile
import zlib
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .score import (
    DYNAMIC_MARKS, SOURCE_FORMATS, TEMPO_SOURCES, DynamicEvent, HarmonicAnnotation,
    KeySignature, Lyric, Measure, NoteEvent, Part, Score, SpelledPitch, TempoEvent,
)

log = logging.getLogger(__name__)

MAGIC = b"NFSC"
FORMAT_VERSION = 1
SUFFIX = ".nfsc"

_STEPS = "CDEFGAB"
_NOTE = struct.Struct("<qqqqqBBbhBBB")
_FRAC = struct.Struct("<qq")
_U32 = struct.Struct("<I")
_INT64_MAX = 2 ** 63 - 1


class CacheError(Exception):
    """A score could not be stored (I/O failure or unrepresentable value)."""


@dataclass(frozen=True)
class CacheKey:
    content_hash: str
    parser_version: str
    format: str


def cache_key(data: bytes, parser_version: str, fmt: str) -> CacheKey:
    return CacheKey(hashlib.sha256(data).hexdigest(), parser_version, fmt)


def entry_path(cache_dir, key: CacheKey) -> Path:
    version = re.sub(r"[^A-Za-z0-9._]", "_", key.parser_version)
    return Path(cache_dir) / key.content_hash[:2] / f"{key.content_hash}-{version}{SUFFIX}"


# -- encoding -------------------------------------------------------------------------

class _Writer:
    def __init__(self):
        self.buf = bytearray()

    def str(self, s: str):
        b = s.encode("utf-8")
        self.buf += _U32.pack(len(b)) + b

    def frac(self, f: Fraction):
        f = Fraction(f)
        if abs(f.numerator) > _INT64_MAX or f.denominator > _INT64_MAX:
            raise CacheError(f"rational {f} does not fit the cache record")
        self.buf += _FRAC.pack(f.numerator, f.denominator)

    def pack(self, fmt: str, *values):
        self.buf += struct.pack(fmt, *values)


def _section(out: bytearray, tag: bytes, body: bytes):
    out += tag + _U32.pack(len(body)) + body


def serialize(score: Score) -> bytes:
    out = bytearray(MAGIC + struct.pack("<H", FORMAT_VERSION))

    w = _Writer()
    w.str(score.source_format)
    w.str(score.source_path)
    w.str(score.parser_version)
    w.pack("<I", score.unknown_dynamics)
    _section(out, b"META", w.buf)

    w = _Writer()
    w.pack("<I", len(score.measure_map))
    for m in score.measure_map:
        w.pack("<q", m.index)
        w.frac(m.start)
        w.pack("<ii", m.numerator, m.denominator)
    _section(out, b"MEAS", w.buf)

    w = _Writer()
    w.pack("<I", len(score.key_signatures))
    for k in score.key_signatures:
        w.frac(k.onset)
        w.pack("<iB", k.fifths, k.mode is not None)
        w.str(k.mode or "")
    _section(out, b"KEYS", w.buf)

    w = _Writer()
    w.pack("<I", len(score.tempo_events))
    for e in score.tempo_events:
        w.frac(e.onset)
        w.pack("<dB", e.bpm, TEMPO_SOURCES.index(e.source))
    _section(out, b"TEMP", w.buf)

    w = _Writer()
    w.pack("<I", len(score.dynamic_events))
    for e in score.dynamic_events:
        w.frac(e.onset)
        w.pack("<iB", e.part_index, DYNAMIC_MARKS.index(e.mark))
    _section(out, b"DYNS", w.buf)

    w = _Writer()
    w.pack("<I", len(score.harmonies))
    for a in score.harmonies:
        w.pack("<q", a.measure_index)
        w.frac(a.beat)
        w.str(a.label)
        w.str(a.local_key)
    _section(out, b"HARM", w.buf)

    for p in score.parts:
        w = _Writer()
        w.pack("<i", p.index)
        w.str(p.name)
        w.pack("<hB", -1 if p.midi_program is None else p.midi_program, p.percussion)
        w.pack("<I", len(p.notes))
        for n in p.notes:
            on, du = Fraction(n.onset), Fraction(n.duration)
            if max(abs(on.numerator), on.denominator, du.numerator, du.denominator) > _INT64_MAX:
                raise CacheError("note timing does not fit the cache record")
            sp = n.spelled_pitch
            w.buf += _NOTE.pack(
                on.numerator, on.denominator, du.numerator, du.denominator, n.measure_index,
                n.midi_pitch,
                0 if sp is None else _STEPS.index(sp.step) + 1,
                0 if sp is None else sp.alter,
                0 if sp is None else sp.octave,
                0 if n.velocity is None else n.velocity,
                n.grace, n.tie_to_next)
        w.pack("<I", len(p.lyrics))
        for ly in p.lyrics:
            w.frac(ly.onset)
            w.str(ly.text)
        _section(out, b"PART", w.buf)

    _section(out, b"END_", _U32.pack(zlib.crc32(out)))
    return bytes(out)


# -- decoding -------------------------------------------------------------------------

class _Corrupt(Exception):
    pass


class _Reader:
    def __init__(self, buf: bytes, fracs: dict):
        self.buf = buf
        self.pos = 0
        self.fracs = fracs

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise _Corrupt("section overrun")
        b = self.buf[self.pos:self.pos + n]
        self.pos += n
        return b

    def unpack(self, fmt: str):
        size = struct.calcsize(fmt)
        return struct.unpack(fmt, self.take(size))

    def str(self) -> str:
        (n,) = self.unpack("<I")
        return self.take(n).decode("utf-8")

    def frac(self) -> Fraction:
        return self.make_frac(*self.unpack("<qq"))

    def make_frac(self, num: int, den: int) -> Fraction:
        key = (num, den)
        f = self.fracs.get(key)
        if f is None:
            if den <= 0:
                raise _Corrupt("non-positive denominator")
            f = self.fracs[key] = Fraction(num, den)
        return f


def deserialize(payload: bytes) -> Score:
    """Inverse of :func:`serialize`; raises ``ValueError`` on any corruption."""
    try:
        return _deserialize(payload)
    except (_Corrupt, struct.error, UnicodeDecodeError, IndexError, ValueError) as exc:
        raise ValueError(f"corrupt cache payload: {exc}") from exc


def _deserialize(payload: bytes) -> Score:
    if payload[:4] != MAGIC:
        raise _Corrupt("bad magic")
    (version,) = struct.unpack_from("<H", payload, 4)
    if version != FORMAT_VERSION:
        raise _Corrupt(f"unsupported record version {version}")
    pos = 6
    sections: list[tuple[bytes, bytes]] = []
    while True:
        if pos + 8 > len(payload):
            raise _Corrupt("truncated section header")
        tag = payload[pos:pos + 4]
        (length,) = _U32.unpack_from(payload, pos + 4)
        body = payload[pos + 8:pos + 8 + length]
        if len(body) != length:
            raise _Corrupt("truncated section")
        if tag == b"END_":
            if length != 4 or _U32.unpack(body)[0] != zlib.crc32(payload[:pos]):
                raise _Corrupt("checksum mismatch")
            if pos + 8 + length != len(payload):
                raise _Corrupt("trailing bytes")
            break
        sections.append((tag, body))
        pos += 8 + length

    fracs: dict = {}
    fields: dict = {"parts": []}
    for tag, body in sections:
        r = _Reader(body, fracs)
        if tag == b"META":
            fields["source_format"] = r.str()
            fields["source_path"] = r.str()
            fields["parser_version"] = r.str()
            (fields["unknown_dynamics"],) = r.unpack("<I")
        elif tag == b"MEAS":
            (n,) = r.unpack("<I")
            out = []
            for _ in range(n):
                (idx,) = r.unpack("<q")
                start = r.frac()
                num, den = r.unpack("<ii")
                out.append(Measure(idx, start, num, den))
            fields["measure_map"] = tuple(out)
        elif tag == b"KEYS":
            (n,) = r.unpack("<I")
            out = []
            for _ in range(n):
                onset = r.frac()
                fifths, has_mode = r.unpack("<iB")
                mode = r.str()
                out.append(KeySignature(onset, fifths, mode if has_mode else None))
            fields["key_signatures"] = tuple(out)
        elif tag == b"TEMP":
            (n,) = r.unpack("<I")
            out = []
            for _ in range(n):
                onset = r.frac()
                bpm, src = r.unpack("<dB")
                out.append(TempoEvent(onset, bpm, TEMPO_SOURCES[src]))
            fields["tempo_events"] = tuple(out)
        elif tag == b"DYNS":
            (n,) = r.unpack("<I")
            out = []
            for _ in range(n):
                onset = r.frac()
                part, mark = r.unpack("<iB")
                out.append(DynamicEvent(onset, part, DYNAMIC_MARKS[mark]))
            fields["dynamic_events"] = tuple(out)
        elif tag == b"HARM":
            (n,) = r.unpack("<I")
            out = []
            for _ in range(n):
                (m,) = r.unpack("<q")
                beat = r.frac()
                out.append(HarmonicAnnotation(m, beat, r.str(), r.str()))
            fields["harmonies"] = tuple(out)
        elif tag == b"PART":
            fields["parts"].append(_read_part(r))
        else:
            raise _Corrupt(f"unknown section {tag!r}")
        if r.pos != len(body):
            raise _Corrupt(f"section {tag!r} has trailing bytes")
    if "source_format" not in fields or fields["source_format"] not in SOURCE_FORMATS:
        raise _Corrupt("missing or invalid META section")
    fields["parts"] = tuple(fields["parts"])
    return Score(**fields)


def _read_part(r: _Reader) -> Part:
    (index,) = r.unpack("<i")
    name = r.str()
    program, percussion = r.unpack("<hB")
    (n,) = r.unpack("<I")
    raw = r.take(n * _NOTE.size)
    frac = r.make_frac
    spelled_cache: dict = {}
    notes = []
    for (on_n, on_d, du_n, du_d, measure, pitch, step, alter, octave, vel,
         grace, tie) in _NOTE.iter_unpack(raw):
        if step:
            sp = spelled_cache.get((step, alter, octave))
            if sp is None:
                sp = spelled_cache[(step, alter, octave)] = SpelledPitch(_STEPS[step - 1], alter, octave)
        else:
            sp = None
        notes.append(NoteEvent(frac(on_n, on_d), frac(du_n, du_d), pitch, measure, sp,
                               vel or None, bool(grace), bool(tie)))
    (nl,) = r.unpack("<I")
    lyrics = tuple(Lyric(r.frac(), r.str()) for _ in range(nl))
    return Part(index, name, None if program < 0 else program, tuple(notes), lyrics,
                bool(percussion))


# -- directory operations -------------------------------------------------------------

def put(cache_dir, key: CacheKey, score: Score) -> Path:
    """Atomically store ``score`` (temp file + rename). Raises :class:`CacheError`."""
    try:
        payload = serialize(score)
    except (struct.error, UnicodeEncodeError, ValueError) as exc:
        raise CacheError(f"score cannot be serialized: {exc}") from exc
    path = entry_path(cache_dir, key)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=SUFFIX)
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
    except OSError as exc:
        raise CacheError(f"cannot write cache entry {path}: {exc}") from exc
    return path


def get(cache_dir, key: CacheKey) -> Optional[Score]:
    """Cached score for ``key`` or ``None``; corrupt entries are deleted."""
    path = entry_path(cache_dir, key)
    try:
        payload = path.read_bytes()
    except OSError:
        return None
    try:
        score = deserialize(payload)
    except ValueError as exc:
        log.warning("dropping corrupt cache entry %s (%s)", path, exc)
        try:
            path.unlink()
        except OSError:
            pass
        return None
    if score.source_format != key.format or score.parser_version != key.parser_version:
        return None
    return score


def clear(cache_dir) -> int:
    """Remove every cache entry under ``cache_dir``; returns the number of files removed."""
    root = Path(cache_dir)
    if not root.is_dir():
        return 0
    removed = 0
    for sub in root.iterdir():
        if sub.is_dir() and re.fullmatch(r"[0-9a-f]{2}", sub.name):
            removed += sum(1 for f in sub.iterdir() if f.suffix == SUFFIX)
            shutil.rmtree(sub)
    return removed

"""Standard MIDI File (format 0 and 1) reader."""

from __future__ import annotations

import bisect
import struct
from fractions import Fraction

from ..score import (
    KeySignature, Lyric, NoteEvent, Part, Score, ScoreValidationError,
    TempoEvent, build_measure_map, merge_same_pitch_overlaps, validate_score,
)
from .common import PARSER_VERSION, ParseError, wrap_validation

PERCUSSION_CHANNEL = 9
_DATA_LEN = {0x80: 2, 0x90: 2, 0xA0: 2, 0xB0: 2, 0xC0: 1, 0xD0: 1, 0xE0: 2}


class _Track:
    __slots__ = ("name", "instrument", "notes", "programs", "lyrics", "tempos",
                 "time_sigs", "keys", "end_tick")

    def __init__(self):
        self.name = ""
        self.instrument = ""
        self.notes = {}  # channel -> list of (start, end, pitch, velocity)
        self.programs = {}  # channel -> first program seen
        self.lyrics = []
        self.tempos = []
        self.time_sigs = []
        self.keys = []
        self.end_tick = 0


def _read_track(data: bytes, pos: int, end: int, path: str) -> _Track:
    track = _Track()
    tick = 0
    status = 0
    open_notes: dict[tuple[int, int], list[tuple[int, int]]] = {}

    def vlq(p):
        value = 0
        for _ in range(4):
            if p >= end:
                raise ParseError(path, "malformed_event", "truncated variable-length quantity", p)
            b = data[p]
            p += 1
            value = (value << 7) | (b & 0x7F)
            if not b & 0x80:
                return value, p
        raise ParseError(path, "malformed_event", "variable-length quantity too long", p)

    while pos < end:
        delta, pos = vlq(pos)
        tick += delta
        if pos >= end:
            raise ParseError(path, "malformed_event", "truncated event", pos)
        b = data[pos]
        if b & 0x80:
            pos += 1
            if b < 0xF0:
                status = b
        elif status == 0:
            raise ParseError(path, "malformed_event", "data byte without running status", pos)
        else:
            b = status

        if b < 0xF0:
            kind = b & 0xF0
            ch = b & 0x0F
            n = _DATA_LEN[kind]
            if pos + n > end:
                raise ParseError(path, "malformed_event", "truncated channel message", pos)
            d1 = data[pos]
            d2 = data[pos + 1] if n == 2 else 0
            if (d1 | d2) & 0x80:
                raise ParseError(path, "malformed_event", "data byte has high bit set", pos)
            pos += n
            if kind == 0x90 and d2 > 0:
                open_notes.setdefault((ch, d1), []).append((tick, d2))
            elif kind == 0x80 or kind == 0x90:
                stack = open_notes.get((ch, d1))
                if stack:
                    start, vel = stack.pop(0)
                    if tick > start:
                        track.notes.setdefault(ch, []).append((start, tick, d1, vel))
            elif kind == 0xC0:
                track.programs.setdefault(ch, d1)
            continue

        status = 0
        if b == 0xFF:
            if pos >= end:
                raise ParseError(path, "malformed_event", "truncated meta event", pos)
            mtype = data[pos]
            length, pos = vlq(pos + 1)
            if pos + length > end:
                raise ParseError(path, "malformed_event", "truncated meta payload", pos)
            payload = data[pos:pos + length]
            pos += length
            if mtype == 0x2F:
                break
            if mtype == 0x51 and length >= 3:
                usec = (payload[0] << 16) | (payload[1] << 8) | payload[2]
                if usec > 0:
                    track.tempos.append((tick, 60_000_000 / usec))
            elif mtype == 0x58 and length >= 2 and 0 < payload[0] <= 64 and payload[1] <= 6:
                track.time_sigs.append((tick, payload[0], 2 ** payload[1]))
            elif mtype == 0x59 and length >= 2:
                sf = struct.unpack("b", payload[:1])[0]
                track.keys.append((tick, sf, "minor" if payload[1] == 1 else "major"))
            elif mtype == 0x05:
                track.lyrics.append((tick, _text(payload)))
            elif mtype == 0x03 and not track.name:
                track.name = _text(payload)
            elif mtype == 0x04 and not track.instrument:
                track.instrument = _text(payload)
        elif b in (0xF0, 0xF7):
            length, pos = vlq(pos)
            if pos + length > end:
                raise ParseError(path, "malformed_event", "truncated sysex", pos)
            pos += length
        else:
            raise ParseError(path, "malformed_event", f"unsupported status byte 0x{b:02X}", pos)

    track.end_tick = tick
    for (ch, pitch), stack in open_notes.items():
        for start, vel in stack:
            if tick > start:
                track.notes.setdefault(ch, []).append((start, tick, pitch, vel))
    return track


def _text(payload: bytes) -> str:
    try:
        return payload.decode("utf-8").strip("\x00")
    except UnicodeDecodeError:
        return payload.decode("latin-1").strip("\x00")


def parse_midi(data: bytes, path: str = "") -> Score:
    """Parse SMF bytes into a :class:`Score` (onsets in quarters = ticks / division)."""
    if len(data) < 14 or data[:4] != b"MThd":
        raise ParseError(path, "malformed_header", "missing MThd header", 0)
    hlen, fmt, ntrks, division = struct.unpack(">IHHH", data[4:14])
    if hlen < 6:
        raise ParseError(path, "malformed_header", f"header length {hlen} < 6", 4)
    if division & 0x8000:
        raise ParseError(path, "malformed_header", "SMPTE time division is not supported", 12)
    if division == 0:
        raise ParseError(path, "malformed_header", "division is zero", 12)
    if fmt == 2:
        raise ParseError(path, "unsupported_construct", "SMF format 2", 8)
    if fmt > 2:
        raise ParseError(path, "malformed_header", f"unknown SMF format {fmt}", 8)

    pos = 8 + hlen
    tracks = []
    while pos + 8 <= len(data) and len(tracks) < ntrks:
        ctype = data[pos:pos + 4]
        (clen,) = struct.unpack(">I", data[pos + 4:pos + 8])
        body = pos + 8
        if body + clen > len(data):
            raise ParseError(path, "malformed_event", "truncated track chunk", pos)
        if ctype == b"MTrk":
            tracks.append(_read_track(data, body, body + clen, path))
        pos = body + clen
    if len(tracks) < ntrks and pos < len(data):
        raise ParseError(path, "malformed_event", "trailing bytes after last chunk", pos)

    fractions: dict[int, Fraction] = {}

    def q(tick: int) -> Fraction:
        f = fractions.get(tick)
        if f is None:
            f = fractions[tick] = Fraction(tick, division)
        return f

    global_programs = {}
    for tr in tracks:
        for ch, prog in tr.programs.items():
            global_programs.setdefault(ch, prog)

    span_tick = max((e for tr in tracks for notes in tr.notes.values()
                     for _, e, _, _ in notes), default=0)
    time_sigs = sorted({(q(t), num, den) for tr in tracks for t, num, den in tr.time_sigs})
    dedup: dict[Fraction, tuple] = {}
    for onset, num, den in time_sigs:
        dedup.setdefault(onset, (onset, num, den))
    try:
        measure_map = build_measure_map(list(dedup.values()), q(span_tick))
    except ScoreValidationError as exc:
        raise wrap_validation(path, exc) from exc
    starts = [m.start for m in measure_map]

    parts = []
    for tr in tracks:
        note_onsets = []
        for ch in sorted(tr.notes):
            raw = tr.notes[ch]
            events = []
            for start, stop, pitch, vel in raw:
                onset = q(start)
                events.append(NoteEvent(onset, q(stop) - onset, pitch,
                                        bisect.bisect_right(starts, onset), None, vel))
            events = merge_same_pitch_overlaps(events)
            prog = tr.programs.get(ch, global_programs.get(ch, 0))
            parts.append([tr, ch, events, prog])
            note_onsets.append({n.onset for n in events})
        # lyrics attach to the first part of this track that has a note at that onset
        track_parts = parts[len(parts) - len(note_onsets):]
        lyr_by_part: dict[int, list] = {}
        for tick, text in tr.lyrics:
            onset = q(tick)
            for k, onsets in enumerate(note_onsets):
                if onset in onsets:
                    lyr_by_part.setdefault(k, []).append(Lyric(onset, text))
                    break
        for k, tp in enumerate(track_parts):
            tp.append(lyr_by_part.get(k, []))

    # lyrics in note-less tracks (common in format 1): attach to any part with a matching onset
    orphan = [(q(t), text) for tr in tracks if not tr.notes for t, text in tr.lyrics]
    for onset, text in orphan:
        for tp in parts:
            if any(n.onset == onset for n in tp[2]):
                tp[4].append(Lyric(onset, text))
                break

    score_parts = tuple(
        Part(index=i, name=tr.name or tr.instrument, midi_program=prog,
             notes=tuple(events), lyrics=tuple(sorted(lyrics)),
             percussion=(ch == PERCUSSION_CHANNEL))
        for i, (tr, ch, events, prog, lyrics) in enumerate(parts)
    )
    tempos = sorted({(q(t), bpm) for tr in tracks for t, bpm in tr.tempos})
    keys = {}
    for onset, sf, mode in sorted((q(t), sf, mode) for tr in tracks for t, sf, mode in tr.keys):
        if -7 <= sf <= 7:
            keys.setdefault(onset, KeySignature(onset, sf, mode))
    score = Score(
        parts=score_parts,
        measure_map=measure_map,
        key_signatures=tuple(keys.values()),
        tempo_events=tuple(TempoEvent(o, bpm, "midi_meta") for o, bpm in tempos),
        dynamic_events=(),
        source_format="midi",
        source_path=path,
        parser_version=PARSER_VERSION,
    )
    try:
        return validate_score(score)
    except ScoreValidationError as exc:
        raise wrap_validation(path, exc) from exc

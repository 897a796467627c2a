"""Humdrum **kern reader.

Only ``**kern`` spines become parts. ``**dynam`` and ``**text``/``**silbe``
spines are attached to the nearest ``**kern`` spine on their left. Spine
splits and merges are rejected.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..score import (
    DYNAMIC_MARKS, DynamicEvent, KeySignature, Lyric, Measure, Part, Score,
    ScoreValidationError, SpelledPitch, TempoEvent, merge_same_pitch_overlaps, validate_score,
)
from .common import (
    PARSER_VERSION, ParseError, TiedNote, check_pitch, decode_text, merge_ties,
    tempo_from_words, wrap_validation,
)

_MANIPULATORS = {"*^", "*v", "*+", "*x"}
_TIME_SIG = re.compile(r"^\*M(\d+)/(\d+)")
_KEY_SIG = re.compile(r"^\*k\[([a-gA-G#\-n]*)\]$")
_KEY_DESIG = re.compile(r"^\*([A-Ga-g])([#\-]*):")
_TEMPO = re.compile(r"^\*MM(\d+(?:\.\d+)?)")
_RECIP = re.compile(r"(\d+)(?:%(\d+))?(\.*)")
_IGNORED = set("XxyLJkK;'\"`~^vuoOtTmMwWS$RHhp&{}()<>|\\/:,+?!@")

# Humdrum instrument codes (*I...) with an obvious orchestral name
INSTRUMENT_CODES = {
    "vox": "voice", "soprn": "soprano", "mezzo": "soprano", "calto": "alto", "alto": "alto",
    "tenor": "tenor", "barit": "bass", "bass": "bass", "violn": "violin", "viola": "viola",
    "cello": "cello", "contr": "contrabass", "flt": "flute", "picco": "flute", "oboe": "oboe",
    "clars": "clarinet", "clarn": "clarinet", "fagot": "bassoon", "corno": "horn",
    "tromp": "trumpet", "piano": "piano", "organ": "organ", "cemba": "harpsichord",
    "clavi": "harpsichord",
}


def _recip(token: str, path: str, line: int) -> tuple[Fraction, bool]:
    """Duration in quarters of a kern token, and whether one was present."""
    m = _RECIP.search(token)
    if m is None:
        return Fraction(0), False
    digits, denom, dots = m.groups()
    if digits.strip("0") == "":
        # 0 = breve, 00 = long, 000 = maxima
        base = Fraction(8) * 2 ** (len(digits) - 1)
    else:
        base = Fraction(4 * int(denom or 1), int(digits))
    total = base
    add = base
    for _ in dots:
        add /= 2
        total += add
    return total, True


def _parse_note(sub: str, path: str, line: int):
    """Parse one kern subtoken into (duration, pitch|None, spelled, grace, tie_start, tie_stop)."""
    letters = [c for c in sub if c.isalpha() and c.lower() in "abcdefg"]
    is_rest = "r" in sub
    grace = "q" in sub or "Q" in sub
    dur, has_dur = _recip(sub, path, line)
    for c in sub:
        if c.isalpha() and c.lower() not in "abcdefgrqn" and c not in _IGNORED:
            raise ParseError(path, "malformed_event", f"unexpected character {c!r} in {sub!r}", line)
    if not has_dur and not grace:
        raise ParseError(path, "malformed_event", f"token {sub!r} has no duration", line)
    if grace:
        dur = Fraction(0)
    tie_start = "[" in sub or "_" in sub
    tie_stop = "]" in sub or "_" in sub
    if is_rest:
        if letters:
            raise ParseError(path, "malformed_event", f"rest with pitch in {sub!r}", line)
        return dur, None, None, grace, False, False
    if not letters:
        raise ParseError(path, "malformed_event", f"unparsable token {sub!r}", line)
    if len(set(letters)) != 1:
        raise ParseError(path, "malformed_event", f"mixed pitch letters in {sub!r}", line)
    letter = letters[0]
    count = len(letters)
    octave = 4 + (count - 1) if letter.islower() else 3 - (count - 1)
    alter = sub.count("#") - sub.count("-")
    if not -2 <= alter <= 2:
        raise ParseError(path, "malformed_event", f"alteration {alter} out of range", line)
    spelled = SpelledPitch(letter.upper(), alter, octave)
    pitch = check_pitch(spelled.semitone, path, line)
    return dur, pitch, spelled, grace, tie_start, tie_stop


def _part_name(token: str) -> str | None:
    if token.startswith('*I"'):
        return token[3:]
    if token.startswith("*I") and len(token) > 2 and token[2].islower():
        code = token[2:]
        return INSTRUMENT_CODES.get(code)
    return None


def parse_kern(text, path: str = "") -> Score:
    """Parse Humdrum **kern text (``str`` or bytes) into a :class:`Score`."""
    if isinstance(text, (bytes, bytearray)):
        text = decode_text(bytes(text))
    lines = text.splitlines()
    spines: list[str] | None = None
    kern_cols: list[int] = []
    owner: dict[int, int] = {}  # column -> kern part position

    measures = [[1, Fraction(0), 4, 4]]
    cursors: list[Fraction] = []
    raw_notes: list[list[TiedNote]] = []
    lyrics: list[dict] = []
    names: list[str] = []
    keys: dict[Fraction, list] = {}
    tempos: list[TempoEvent] = []
    dyns: list[DynamicEvent] = []
    unknown = 0
    terminated = False

    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r")
        if not line:
            continue
        if line.startswith("!!"):
            if line.startswith("!!!OMD:"):
                bpm = tempo_from_words(line[7:])
                if bpm is not None:
                    tempos.append(TempoEvent(Fraction(0), bpm, "tempo_word"))
            continue
        fields = line.split("\t")
        if spines is None:
            if not fields[0].startswith("**"):
                raise ParseError(path, "malformed_header", "missing exclusive interpretation", lineno)
            spines = fields
            kern_cols = [i for i, f in enumerate(fields) if f == "**kern"]
            if not kern_cols:
                raise ParseError(path, "malformed_header", "no **kern spine", lineno)
            for col in range(len(fields)):
                left = [k for k, c in enumerate(kern_cols) if c <= col]
                owner[col] = left[-1] if left else 0
            cursors = [Fraction(0)] * len(kern_cols)
            raw_notes = [[] for _ in kern_cols]
            lyrics = [{} for _ in kern_cols]
            names = [""] * len(kern_cols)
            continue
        if terminated:
            continue
        if any(f in _MANIPULATORS for f in fields):
            raise ParseError(path, "unsupported_construct", "spine split/merge/add/exchange", lineno)
        if len(fields) != len(spines):
            raise ParseError(path, "malformed_event",
                             f"expected {len(spines)} spines, found {len(fields)}", lineno)
        first = fields[0]
        if first.startswith("!"):
            continue
        if first.startswith("*"):
            if all(f == "*-" for f in fields):
                terminated = True
                continue
            if "*-" in fields:
                raise ParseError(path, "unsupported_construct", "partial spine termination", lineno)
            now = max(cursors)
            for k, col in enumerate(kern_cols):
                tok = fields[col]
                name = _part_name(tok)
                if name is not None and not names[k]:
                    names[k] = name
                if k != 0:
                    continue
                m = _TIME_SIG.match(tok)
                if m:
                    num, den = int(m.group(1)), int(m.group(2))
                    if not (0 < num <= 64 and den in (1, 2, 4, 8, 16, 32, 64)):
                        raise ParseError(path, "malformed_event", f"bad meter {tok}", lineno)
                    if measures[-1][1] == now:
                        measures[-1][2:] = [num, den]
                    else:
                        measures.append([measures[-1][0] + 1, now, num, den])
                    continue
                m = _KEY_SIG.match(tok)
                if m:
                    acc = m.group(1)
                    fifths = acc.count("#") - acc.count("-")
                    if -7 <= fifths <= 7:
                        prev = keys.get(now)
                        keys[now] = [fifths, prev[1] if prev else None]
                    continue
                m = _KEY_DESIG.match(tok)
                if m:
                    mode = "major" if m.group(1).isupper() else "minor"
                    if now in keys:
                        keys[now][1] = mode
                    continue
                m = _TEMPO.match(tok)
                if m:
                    bpm = float(m.group(1))
                    if bpm > 0:
                        tempos.append(TempoEvent(now, bpm, "metronome_mark"))
            continue
        if first.startswith("="):
            now = max(cursors)
            if now > measures[-1][1]:
                measures.append([measures[-1][0] + 1, now, measures[-1][2], measures[-1][3]])
            cursors = [now] * len(cursors)
            continue

        # data line
        line_time = min(cursors)
        measure = measures[-1][0]
        for col, tok in enumerate(fields):
            if tok == ".":
                continue
            spine = spines[col]
            k = owner[col]
            if spine == "**kern":
                onset = cursors[k]
                step = None
                for sub in tok.split(" "):
                    if not sub:
                        continue
                    dur, pitch, spelled, grace, t_start, t_stop = _parse_note(sub, path, lineno)
                    if pitch is not None:
                        raw_notes[k].append(TiedNote(onset, dur, pitch, measure, spelled,
                                                     grace, t_start, t_stop))
                    if not grace:
                        step = dur if step is None else min(step, dur)
                if step is not None:
                    cursors[k] = onset + step
            elif spine == "**dynam":
                mark = tok.strip()
                if mark in DYNAMIC_MARKS:
                    dyns.append(DynamicEvent(line_time, k, mark))
                elif mark and mark not in ("<", ">", "(", ")", "[", "]"):
                    unknown += 1
            elif spine in ("**text", "**silbe"):
                syl = tok.strip()
                if syl and not syl.startswith("*"):
                    lyrics[k].setdefault(line_time, syl)

    if spines is None:
        raise ParseError(path, "malformed_header", "no exclusive interpretation line")

    end = max(cursors, default=Fraction(0))
    if len(measures) > 1 and measures[-1][1] >= end:
        measures.pop()
    measure_map = tuple(Measure(i, s, n, d) for i, s, n, d in measures)

    parts = []
    for k in range(len(kern_cols)):
        notes = merge_same_pitch_overlaps(merge_ties(raw_notes[k]))
        onsets = {n.onset for n in notes}
        parts.append(Part(
            index=k, name=names[k], notes=tuple(notes),
            lyrics=tuple(Lyric(o, t) for o, t in sorted(lyrics[k].items()) if o in onsets),
        ))
    score = Score(
        parts=tuple(parts),
        measure_map=measure_map,
        key_signatures=tuple(KeySignature(o, f, md) for o, (f, md) in sorted(keys.items())),
        tempo_events=tuple(sorted(set(tempos))),
        dynamic_events=tuple(sorted(dyns)),
        source_format="kern",
        source_path=path,
        parser_version=PARSER_VERSION,
        unknown_dynamics=unknown,
    )
    try:
        return validate_score(score)
    except ScoreValidationError as exc:
        raise wrap_validation(path, exc) from exc

"""Score writers for SMF, MusicXML and **kern, plus random and handcrafted test scores.

The writers emit exactly the subset each parser reads, so a score written in
all three formats parses back to the same notes (up to what a format cannot
carry: SMF has no spelling, grace notes or notation marks).
"""

from __future__ import annotations

import bisect
import math
import struct
import xml.etree.ElementTree as ET
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from .score import (
    DYNAMIC_MARKS, DynamicEvent, KeySignature, Lyric, Measure, NoteEvent, Part, Score,
    SpelledPitch, TempoEvent, measure_for_onset, merge_same_pitch_overlaps,
    validate_score,
)

SHARP_SPELLING = (("C", 0), ("C", 1), ("D", 0), ("D", 1), ("E", 0), ("F", 0),
                  ("F", 1), ("G", 0), ("G", 1), ("A", 0), ("A", 1), ("B", 0))
MAJOR_TONICS = ("C-", "G-", "D-", "A-", "E-", "B-", "F", "C", "G", "D", "A", "E", "B", "F#", "C#")
MINOR_TONICS = ("a-", "e-", "b-", "f", "c", "g", "d", "a", "e", "b", "f#", "c#", "g#", "d#", "a#")
SHARP_ORDER = ("f#", "c#", "g#", "d#", "a#", "e#", "b#")
FLAT_ORDER = ("b-", "e-", "a-", "d-", "g-", "c-", "f-")


def spell(pitch: int) -> SpelledPitch:
    step, alter = SHARP_SPELLING[pitch % 12]
    return SpelledPitch(step, alter, pitch // 12 - 1)


def _end_of(score: Score) -> Fraction:
    """End of the last measure: next-measure logic for the final one uses its nominal length."""
    last = score.measure_map[-1]
    reach = max((n.end for n in score.notes), default=Fraction(0))
    return max(last.start + last.nominal_length, reach)


def _measure_bounds(score: Score) -> list[tuple[Measure, Fraction]]:
    mm = score.measure_map
    ends = [b.start for b in mm[1:]] + [_end_of(score)]
    return list(zip(mm, ends))


# --- SMF -------------------------------------------------------------------

def _vlq(value: int) -> bytes:
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(out))


def _ticks_per_quarter(score: Score) -> int:
    denoms = {1}
    for n in score.notes:
        denoms.add(n.onset.denominator)
        denoms.add(n.duration.denominator)
    for m in score.measure_map:
        denoms.add(m.start.denominator)
    tpq = math.lcm(*denoms)
    while tpq < 96:
        tpq *= 2
    if tpq > 0x7FFF:
        raise ValueError("rhythm too fine for an SMF time division")
    return tpq


def _track(events: list[tuple[int, int, bytes]]) -> bytes:
    """``events`` as (tick, order, raw bytes); lower order first at equal ticks."""
    body = bytearray()
    tick = 0
    for t, _, raw in sorted(events, key=lambda e: (e[0], e[1])):
        body += _vlq(t - tick) + raw
        tick = t
    body += _vlq(0) + b"\xff\x2f\x00"
    return b"MTrk" + struct.pack(">I", len(body)) + bytes(body)


def _meta(kind: int, payload: bytes) -> bytes:
    return bytes([0xFF, kind]) + _vlq(len(payload)) + payload


def to_midi(score: Score) -> bytes:
    """Format-1 SMF: a conductor track, then one track per part. Grace notes are dropped."""
    tpq = _ticks_per_quarter(score)

    def tick(q):
        return int(q * tpq)

    conductor = []
    prev = None
    for m in score.measure_map:
        if (m.numerator, m.denominator) != prev:
            dd = m.denominator.bit_length() - 1
            conductor.append((tick(m.start), 0, _meta(0x58, bytes([m.numerator, dd, 24, 8]))))
            prev = (m.numerator, m.denominator)
    for ks in score.key_signatures:
        payload = struct.pack("bB", ks.fifths, 1 if ks.mode == "minor" else 0)
        conductor.append((tick(ks.onset), 1, _meta(0x59, payload)))
    for te in score.tempo_events:
        usec = max(1, min(0xFFFFFF, round(60_000_000 / te.bpm)))
        conductor.append((tick(te.onset), 2, _meta(0x51, usec.to_bytes(3, "big"))))
    chunks = [_track(conductor)]

    for part in score.parts:
        if part.percussion:
            ch = 9
        else:
            ch = part.index % 15
            ch = ch + 1 if ch >= 9 else ch
        ev = []
        if part.name:
            ev.append((0, 0, _meta(0x03, part.name.encode("utf-8"))))
        ev.append((0, 1, bytes([0xC0 | ch, (part.midi_program or 0) & 0x7F])))
        for n in part.notes:
            if n.grace:
                continue
            vel = n.velocity or 64
            ev.append((tick(n.onset), 4, bytes([0x90 | ch, n.midi_pitch, vel])))
            ev.append((tick(n.end), 2, bytes([0x80 | ch, n.midi_pitch, 0])))
        for ly in part.lyrics:
            ev.append((tick(ly.onset), 3, _meta(0x05, ly.text.encode("utf-8"))))
        chunks.append(_track(ev))
    header = b"MThd" + struct.pack(">IHHH", 6, 1, len(chunks), tpq)
    return header + b"".join(chunks)


# --- MusicXML --------------------------------------------------------------

def _divisions(score: Score) -> int:
    denoms = {1}
    for n in score.notes:
        denoms.update((n.onset.denominator, n.duration.denominator))
    for m in score.measure_map:
        denoms.add(m.start.denominator)
    for seq in (score.key_signatures, score.tempo_events, score.dynamic_events):
        denoms.update(e.onset.denominator for e in seq)
    return math.lcm(*denoms)


def _sub(parent, tag, text=None, **attrs):
    el = ET.SubElement(parent, tag, {k.replace("_", "-"): str(v) for k, v in attrs.items()})
    if text is not None:
        el.text = str(text)
    return el


def _segments(notes, bounds):
    """Split non-grace notes at barlines. Yields (measure pos, piece onset, dur, note, stop, start)."""
    starts = [m.start for m, _ in bounds]
    out = []
    for n in notes:
        if n.grace:
            continue
        t = n.onset
        k = measure_for_onset(tuple(m for m, _ in bounds), t) - bounds[0][0].index
        while True:
            end = min(n.end, bounds[k][1])
            last = end >= n.end or k + 1 >= len(bounds)
            if last:
                end = n.end
            out.append((k, t, end - t, n, t > n.onset, not last or n.tie_to_next))
            if last:
                break
            k += 1
            t = starts[k]
    return out


def _lyric_el(note_el, text: str):
    if text.startswith("-") and text.endswith("-") and len(text) > 1:
        syl, body = "middle", text[1:-1]
    elif text.endswith("-"):
        syl, body = "begin", text[:-1]
    elif text.startswith("-"):
        syl, body = "end", text[1:]
    else:
        syl, body = "single", text
    ly = _sub(note_el, "lyric", number=1)
    _sub(ly, "syllabic", syl)
    _sub(ly, "text", body)


def _pitch_el(note_el, n: NoteEvent):
    sp = n.spelled_pitch or spell(n.midi_pitch)
    p = _sub(note_el, "pitch")
    _sub(p, "step", sp.step)
    if sp.alter:
        _sub(p, "alter", sp.alter)
    _sub(p, "octave", sp.octave)


def to_musicxml(score: Score) -> bytes:
    """Partwise MusicXML. Overlapping rhythms within a part go to separate voices."""
    div = _divisions(score)
    bounds = _measure_bounds(score)
    root = ET.Element("score-partwise", version="3.1")
    plist = _sub(root, "part-list")
    for part in score.parts:
        sp = _sub(plist, "score-part", id=f"P{part.index + 1}")
        _sub(sp, "part-name", part.name)
        mi = _sub(sp, "midi-instrument", id=f"P{part.index + 1}-I1")
        _sub(mi, "midi-channel", 10 if part.percussion else (part.index % 15 + 1) + (part.index % 15 >= 9))
        if part.midi_program is not None:
            _sub(mi, "midi-program", part.midi_program + 1)

    def units(q):
        return int(q * div)

    for part in score.parts:
        p_el = _sub(root, "part", id=f"P{part.index + 1}")
        segs = _segments(part.notes, bounds)
        lyr = {ly.onset: ly.text for ly in part.lyrics}
        first = part.index == 0
        prev_ts = None
        for k, (m, end) in enumerate(bounds):
            m_el = _sub(p_el, "measure", number=m.index)
            length = end - m.start

            def at(offset, build):
                # place an element at an offset inside the measure, then return to 0
                if offset:
                    _sub(_sub(m_el, "forward"), "duration", units(offset))
                build()
                if offset:
                    _sub(_sub(m_el, "backup"), "duration", units(offset))

            attrs = _sub(m_el, "attributes")
            if k == 0:
                _sub(attrs, "divisions", div)
            if (m.numerator, m.denominator) != prev_ts:
                t = _sub(attrs, "time")
                _sub(t, "beats", m.numerator)
                _sub(t, "beat-type", m.denominator)
                prev_ts = (m.numerator, m.denominator)
            if not len(attrs):
                m_el.remove(attrs)

            in_measure = [e for e in score.key_signatures if m.start <= e.onset < end]
            for ks in in_measure:
                def key(ks=ks):
                    a = _sub(m_el, "attributes")
                    kel = _sub(a, "key")
                    _sub(kel, "fifths", ks.fifths)
                    if ks.mode:
                        _sub(kel, "mode", ks.mode)
                at(ks.onset - m.start, key)
            if first:
                for te in score.tempo_events:
                    if m.start <= te.onset < end:
                        def tempo(te=te):
                            d = _sub(m_el, "direction")
                            met = _sub(_sub(d, "direction-type"), "metronome")
                            _sub(met, "beat-unit", "quarter")
                            _sub(met, "per-minute", repr(float(te.bpm)))
                        at(te.onset - m.start, tempo)
            for de in score.dynamic_events:
                if de.part_index == part.index and m.start <= de.onset < end:
                    def dyn(de=de):
                        d = _sub(m_el, "direction")
                        _sub(_sub(_sub(d, "direction-type"), "dynamics"), de.mark)
                    at(de.onset - m.start, dyn)
            for g in part.notes:
                if g.grace and m.start <= g.onset < end:
                    def grace(g=g):
                        n_el = _sub(m_el, "note")
                        _sub(n_el, "grace")
                        _pitch_el(n_el, g)
                        _sub(n_el, "voice", 1)
                    at(g.onset - m.start, grace)

            chords: dict[tuple, list] = {}
            for seg in segs:
                if seg[0] == k:
                    chords.setdefault((seg[1], seg[2]), []).append(seg)
            voices: list[list] = []
            for (on, dur) in sorted(chords):
                for v in voices:
                    if v[-1][0] + v[-1][1] <= on:
                        v.append((on, dur))
                        break
                else:
                    voices.append([(on, dur)])
            lyric_done = set()
            for vi, voice in enumerate(voices):
                if vi:
                    _sub(_sub(m_el, "backup"), "duration", units(length))
                cursor = m.start
                for on, dur in voice:
                    if on > cursor:
                        _sub(_sub(m_el, "forward"), "duration", units(on - cursor))
                    for j, (_, _, _, n, stop, start) in enumerate(
                            sorted(chords[(on, dur)], key=lambda s: s[3].midi_pitch)):
                        n_el = _sub(m_el, "note")
                        if j:
                            _sub(n_el, "chord")
                        _pitch_el(n_el, n)
                        _sub(n_el, "duration", units(dur))
                        if stop:
                            _sub(n_el, "tie", type="stop")
                        if start:
                            _sub(n_el, "tie", type="start")
                        _sub(n_el, "voice", vi + 1)
                        if on in lyr and on not in lyric_done and on == n.onset:
                            _lyric_el(n_el, lyr[on])
                            lyric_done.add(on)
                    cursor = on + dur
                if cursor < end:
                    _sub(_sub(m_el, "forward"), "duration", units(end - cursor))
            if not voices:
                _sub(_sub(m_el, "forward"), "duration", units(length))
    ET.indent(root)
    return b'<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="utf-8")


# --- **kern ----------------------------------------------------------------

def kern_recip(d: Fraction) -> str:
    whole = Fraction(d) / 4
    special = {Fraction(2): "0", Fraction(3): "0.", Fraction(4): "00"}
    if whole in special:
        return special[whole]
    if whole.numerator == 1:
        return str(whole.denominator)
    base = whole * Fraction(2, 3)
    if base.numerator == 1:
        return f"{base.denominator}."
    base = whole * Fraction(4, 7)
    if base.numerator == 1:
        return f"{base.denominator}.."
    return f"{whole.denominator}%{whole.numerator}"


def kern_pitch(sp: SpelledPitch) -> str:
    if sp.octave >= 4:
        letters = sp.step.lower() * (sp.octave - 3)
    else:
        letters = sp.step * (4 - sp.octave)
    acc = "#" * sp.alter if sp.alter > 0 else "-" * (-sp.alter)
    return letters + acc


def _kern_key(ks: KeySignature) -> tuple[str, Optional[str]]:
    accs = SHARP_ORDER[:ks.fifths] if ks.fifths > 0 else FLAT_ORDER[:-ks.fifths]
    sig = f"*k[{''.join(accs)}]"
    if ks.mode is None:
        return sig, None
    tonics = MINOR_TONICS if ks.mode == "minor" else MAJOR_TONICS
    tonic = tonics[ks.fifths + 7]
    return sig, f"*{tonic}:"


def to_kern(score: Score) -> str:
    """One **kern spine per part, followed by **dynam / **text spines when used."""
    bounds = _measure_bounds(score)
    final = bounds[-1][1]
    global_breaks = {m.start for m, _ in bounds} | {final}
    global_breaks |= {e.onset for e in score.key_signatures}
    global_breaks |= {e.onset for e in score.tempo_events}

    spines, kinds = [], []  # kinds: ("kern"|"dynam"|"text", part index)
    for p in score.parts:
        spines.append("**kern")
        kinds.append(("kern", p.index))
        if any(d.part_index == p.index for d in score.dynamic_events):
            spines.append("**dynam")
            kinds.append(("dynam", p.index))
        if p.lyrics:
            spines.append("**text")
            kinds.append(("text", p.index))

    tokens: dict[int, dict[Fraction, str]] = {}
    graces: dict[int, dict[Fraction, str]] = {}
    for p in score.parts:
        dyn_times = {d.onset for d in score.dynamic_events if d.part_index == p.index}
        reg = [n for n in p.notes if not n.grace]
        breaks = set(global_breaks) | dyn_times
        breaks |= {n.onset for n in reg} | {n.end for n in reg}
        breaks |= {n.onset for n in p.notes if n.grace}
        points = sorted(t for t in breaks if t <= final)
        # split each note at barlines and global break points
        cut = sorted(global_breaks)
        pieces: dict[Fraction, list[str]] = {}
        for n in reg:
            inner = [t for t in cut if n.onset < t < n.end]
            edges = [n.onset] + inner + [n.end]
            pitch = kern_pitch(n.spelled_pitch or spell(n.midi_pitch))
            last = len(edges) - 2
            for i, (a, b) in enumerate(zip(edges, edges[1:])):
                if last == 0:
                    tie = "[" if n.tie_to_next else ""
                    tok = tie + kern_recip(b - a) + pitch
                elif i == 0:
                    tok = "[" + kern_recip(b - a) + pitch
                elif i == last:
                    tok = kern_recip(b - a) + pitch + ("_" if n.tie_to_next else "]")
                else:
                    tok = kern_recip(b - a) + pitch + "_"
                pieces.setdefault(a, []).append((b - a, tok))
        toks = {}
        for t, nxt in zip(points, points[1:]):
            here = pieces.get(t, [])
            gap = nxt - t
            subs = [tok for _, tok in here]
            if not here or min(d for d, _ in here) > gap:
                subs.append(kern_recip(gap) + "r")
            toks[t] = " ".join(subs)
        tokens[p.index] = toks
        gr: dict[Fraction, list[str]] = {}
        for n in p.notes:
            if n.grace:
                gr.setdefault(n.onset, []).append(
                    "8q" + kern_pitch(n.spelled_pitch or spell(n.midi_pitch)))
        graces[p.index] = {t: " ".join(v) for t, v in gr.items()}

    dyn_tok: dict[tuple[int, Fraction], str] = {}
    for d in score.dynamic_events:
        dyn_tok.setdefault((d.part_index, d.onset), d.mark)
    lyr_tok = {(p.index, ly.onset): ly.text for p in score.parts for ly in p.lyrics}

    lines = ["\t".join(spines)]

    def interp(fn):
        return "\t".join(fn(kind, pi) for kind, pi in kinds)

    lines.append(interp(lambda kind, pi: f'*I"{score.parts[pi].name}'
                        if kind == "kern" and score.parts[pi].name else "*"))
    times = sorted(set().union(*[set(v) for v in tokens.values()]) | {
        t for v in graces.values() for t in v})
    measure_at = {m.start: m for m, _ in bounds}
    prev_ts = None
    for t in times:
        m = measure_at.get(t)
        if m is not None and m.index != bounds[0][0].index:
            lines.append("\t".join(f"={m.index}" for _ in kinds))
        if m is not None and (m.numerator, m.denominator) != prev_ts:
            lines.append(interp(lambda kind, pi: f"*M{m.numerator}/{m.denominator}"
                                if kind == "kern" else "*"))
            prev_ts = (m.numerator, m.denominator)
        for ks in score.key_signatures:
            if ks.onset == t:
                sig, desig = _kern_key(ks)
                lines.append(interp(lambda kind, pi: sig if kind == "kern" else "*"))
                if desig:
                    lines.append(interp(lambda kind, pi: desig if kind == "kern" else "*"))
        for te in score.tempo_events:
            if te.onset == t:
                lines.append(interp(lambda kind, pi: f"*MM{float(te.bpm):g}"
                                    if kind == "kern" and pi == 0 else "*"))
        if any(t in g for g in graces.values()):
            lines.append(interp(lambda kind, pi: graces[pi].get(t, ".")
                                if kind == "kern" else "."))
        if any(t in tok for tok in tokens.values()):
            def data(kind, pi):
                if kind == "kern":
                    return tokens[pi].get(t, ".")
                if kind == "dynam":
                    return dyn_tok.get((pi, t), ".")
                return lyr_tok.get((pi, t), ".")
            lines.append(interp(data))
    lines.append("\t".join("==" for _ in kinds))
    lines.append("\t".join("*-" for _ in kinds))
    return "\n".join(lines) + "\n"


# --- score construction ----------------------------------------------------

def make_score(parts, time_signatures=((4, 4),), n_measures: Optional[int] = None,
               key_signatures=(), tempo_events=(), dynamic_events=(),
               source_format: str = "midi") -> Score:
    """Build a validated score from plain note tuples.

    ``parts`` holds dicts with ``notes`` as ``(onset, duration, pitch[, velocity])``
    tuples (grace notes: duration 0), optional ``name``, ``program``,
    ``lyrics`` ``{onset: text}``. ``time_signatures`` lists one ``(num, den)``
    per measure; the last entry repeats.
    """
    notes_all = [Fraction(n[0]) + Fraction(n[1]) for p in parts for n in p["notes"]]
    span = max(notes_all, default=Fraction(0))
    measures = []
    t = Fraction(0)
    i = 0
    while True:
        num, den = time_signatures[min(i, len(time_signatures) - 1)]
        measures.append(Measure(i + 1, t, num, den))
        t += Fraction(4 * num, den)
        i += 1
        if (n_measures is not None and i >= n_measures) or (n_measures is None and t >= span):
            break
    mm = tuple(measures)
    starts = [m.start for m in mm]
    out_parts = []
    for k, p in enumerate(parts):
        events = []
        for n in p["notes"]:
            onset, dur, pitch = Fraction(n[0]), Fraction(n[1]), int(n[2])
            vel = int(n[3]) if len(n) > 3 else None
            events.append(NoteEvent(onset, dur, pitch, bisect.bisect_right(starts, onset),
                                    spell(pitch), vel, dur == 0))
        events = merge_same_pitch_overlaps(events)
        lyrics = tuple(sorted(Lyric(Fraction(o), txt) for o, txt in p.get("lyrics", {}).items()))
        out_parts.append(Part(k, p.get("name", ""), p.get("program", 0), tuple(events), lyrics))
    return validate_score(Score(
        parts=tuple(out_parts), measure_map=mm,
        key_signatures=tuple(KeySignature(Fraction(o), f, md) for o, f, md in key_signatures),
        tempo_events=tuple(TempoEvent(Fraction(o), float(b), "metronome_mark")
                           for o, b in tempo_events),
        dynamic_events=tuple(sorted(DynamicEvent(Fraction(o), pi, mk)
                                    for o, pi, mk in dynamic_events)),
        source_format=source_format,
    ))


RHYTHMS = (2, 4, 6, 8, 1)  # in sixteenths


def random_score(seed: int, n_parts: int = 4, n_measures: int = 64,
                 chord_prob: float = 0.15) -> Score:
    """Random multi-part 4/4 score; every part reaches the final barline."""
    rng = np.random.default_rng(seed)
    parts = []
    bar = 16
    end = bar * n_measures
    for k in range(n_parts):
        center = 72 - 12 * k
        pitch = center
        notes = []
        t = 0
        while t < end:
            room = bar - t % bar
            choices = [r for r in RHYTHMS if r <= room]
            dur = choices[rng.integers(len(choices))]
            if rng.random() < 0.1:
                t += dur  # rest
                continue
            pitch = int(np.clip(pitch + rng.integers(-4, 5), center - 12, center + 12))
            vel = int(rng.integers(40, 110))
            notes.append((t, dur, pitch, vel))
            if rng.random() < chord_prob:
                notes.append((t, dur, pitch - int(rng.choice([3, 4, 7])), vel))
            t += dur
        if notes and notes[-1][0] + notes[-1][1] < end:
            notes.append((end - 1, 1, pitch, 64))
        notes = [(Fraction(a, 4), Fraction(d, 4), p, v) for a, d, p, v in notes]
        parts.append({"notes": notes, "name": f"Part {k + 1}", "program": int(rng.integers(0, 80))})
    fifths = int(rng.integers(-4, 5))
    return make_score(parts, n_measures=n_measures, key_signatures=[(0, fifths, "major")],
                      tempo_events=[(0, float(rng.integers(60, 160)))])


def _scale_notes(start, steps, dur=Fraction(1), t0=Fraction(0)):
    out, t = [], Fraction(t0)
    for s in steps:
        out.append((t, dur, start + s))
        t += dur
    return out


def conformance_scores() -> list[tuple[str, Score]]:
    """Ten small handcrafted scores covering ties, chords, meters, tuplets and voices."""
    F = Fraction
    scores = []

    # 1. C major scale, one part, dynamics and tempo
    scores.append(("c_major_scale", make_score(
        [{"notes": _scale_notes(60, [0, 2, 4, 5, 7, 9, 11, 12]), "name": "Flute", "program": 73}],
        key_signatures=[(0, 0, "major")], tempo_events=[(0, 96)],
        dynamic_events=[(0, 0, "mf"), (4, 0, "p")])))

    # 2. two-part counterpoint in 3/4 with a tie across the barline
    upper = [(0, 1, 67), (1, 1, 69), (2, 2, 71), (4, 1, 72), (5, 1, 71), (6, 3, 67)]
    lower = [(0, 3, 48), (3, 3, 55), (6, 1, 52), (7, 2, 48)]
    scores.append(("two_voice_3_4", make_score(
        [{"notes": upper, "name": "Violin", "program": 40},
         {"notes": lower, "name": "Cello", "program": 42}],
        time_signatures=((3, 4),), key_signatures=[(0, 1, "major")], tempo_events=[(0, 72)])))

    # 3. block chords, four-part hymn texture in one part plus bass
    chords = []
    for i, triad in enumerate([(60, 64, 67), (65, 69, 72), (67, 71, 74), (60, 64, 67)]):
        for p in triad:
            chords.append((2 * i, 2, p))
    bass = [(0, 2, 48), (2, 2, 53), (4, 2, 55), (6, 2, 36)]
    scores.append(("hymn_chords", make_score(
        [{"notes": chords, "name": "Organ", "program": 19},
         {"notes": bass, "name": "Contrabass", "program": 43}],
        key_signatures=[(0, 0, "major")], dynamic_events=[(0, 0, "f"), (0, 1, "f"), (6, 0, "pp")])))

    # 4. triplets and dotted rhythms in 6/8, minor key
    notes = [(0, F(3, 2), 57), (F(3, 2), F(1, 2), 59), (2, 1, 60), (3, F(1, 3), 62),
             (F(10, 3), F(1, 3), 64), (F(11, 3), F(1, 3), 65), (4, 2, 64), (6, 3, 69)]
    scores.append(("triplets_6_8", make_score(
        [{"notes": notes, "name": "Clarinet", "program": 71}],
        time_signatures=((6, 8),), key_signatures=[(0, 0, "minor")], tempo_events=[(0, 60)])))

    # 5. meter change 4/4 -> 3/4 -> 2/4 and a key change
    notes = _scale_notes(62, [0, 4, 7, 12]) + _scale_notes(62, [11, 9, 7], t0=F(4)) \
        + _scale_notes(62, [5, 4], t0=F(7))
    scores.append(("meter_changes", make_score(
        [{"notes": notes, "name": "Oboe", "program": 68}],
        time_signatures=((4, 4), (3, 4), (2, 4)),
        key_signatures=[(0, 2, "major"), (7, -1, "minor")], tempo_events=[(0, 120), (4, 100)])))

    # 6. song with lyrics, syllable hyphenation
    mel = _scale_notes(64, [0, 0, 2, 0, 5, 4], dur=F(1)) + [(6, 2, 64)]
    lyrics = {0: "Hap-", 1: "-py", 2: "birth-", 3: "-day", 4: "to", 5: "you", 6: "all"}
    scores.append(("song_lyrics", make_score(
        [{"notes": mel, "name": "Soprano", "program": 52, "lyrics": lyrics},
         {"notes": [(0, 4, 48), (4, 4, 43)], "name": "Piano", "program": 0}],
        key_signatures=[(0, 0, "major")], tempo_events=[(0, 90)], dynamic_events=[(0, 0, "mp")])))

    # 7. two rhythmic layers in one part (forces voices / overlapping notes)
    notes = [(0, 4, 48), (0, 1, 64), (1, 1, 65), (2, 1, 67), (3, 1, 69),
             (4, 2, 50), (4, F(1, 2), 72), (F(9, 2), F(1, 2), 71), (5, 1, 69), (6, 2, 67)]
    scores.append(("layered_voices", make_score(
        [{"notes": notes, "name": "Piano", "program": 0}], key_signatures=[(0, 0, "major")])))

    # 8. long notes tied over several barlines, string quartet
    parts = [
        {"notes": [(0, 6, 76), (6, 2, 74), (8, 4, 72)], "name": "Violin I", "program": 40},
        {"notes": [(0, 2, 67), (2, 8, 69), (10, 2, 67)], "name": "Violin II", "program": 40},
        {"notes": [(0, 12, 60)], "name": "Viola", "program": 41},
        {"notes": [(0, 4, 48), (4, 4, 53), (8, 4, 43)], "name": "Cello", "program": 42},
    ]
    scores.append(("tied_quartet", make_score(
        parts, key_signatures=[(0, 0, "major")], tempo_events=[(0, 66)],
        dynamic_events=[(0, 0, "p"), (0, 3, "p"), (8, 0, "f")])))

    # 9. chromatic line with flats, sixteenths and a rest
    notes = [(F(i, 4), F(1, 4), 70 - i) for i in range(12)] + [(4, 2, 58), (7, 1, 46)]
    scores.append(("chromatic_sixteenths", make_score(
        [{"notes": notes, "name": "Trumpet", "program": 56}],
        key_signatures=[(0, -3, "major")], tempo_events=[(0, 132)],
        dynamic_events=[(0, 0, "ff"), (4, 0, "mf")])))

    # 10. quintuplets and a 5/4 measure
    notes = [(F(i, 5), F(1, 5), 60 + i) for i in range(5)] + [(1, 2, 67), (3, 2, 65),
                                                             (5, 5, 60)]
    scores.append(("quintuplets_5_4", make_score(
        [{"notes": notes, "name": "Bassoon", "program": 70},
         {"notes": [(0, 5, 41), (5, 5, 36)], "name": "Horn", "program": 60}],
        time_signatures=((5, 4),), key_signatures=[(0, 0, None)])))
    return scores


def write_random_corpus(out, n_files=200, n_parts=4, n_measures=64, seed=0) -> list[Path]:
    """``synth_0000.mid`` ... built from ``random_score(seed + i)``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(n_files):
        p = out / f"synth_{i:04d}.mid"
        p.write_bytes(to_midi(random_score(seed + i, n_parts, n_measures)))
        paths.append(p)
    return paths


def write_conformance(out) -> None:
    """The conformance scores under ``midi/``, ``musicxml/`` and ``kern/``."""
    out = Path(out)
    for sub in ("midi", "musicxml", "kern"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    for name, score in conformance_scores():
        (out / "midi" / f"{name}.mid").write_bytes(to_midi(score))
        (out / "musicxml" / f"{name}.musicxml").write_bytes(to_musicxml(score))
        (out / "kern" / f"{name}.krn").write_text(to_kern(score), encoding="utf-8")


__all__ = [
    "DYNAMIC_MARKS", "conformance_scores", "kern_pitch", "kern_recip", "make_score",
    "random_score", "spell", "to_kern", "to_midi", "to_musicxml", "write_conformance",
    "write_random_corpus",
]

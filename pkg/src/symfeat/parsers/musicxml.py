"""MusicXML partwise reader (plain ``.xml``/``.musicxml`` and ``.mxl`` containers)."""

from __future__ import annotations

import bisect
import io
import logging
import posixpath
import xml.etree.ElementTree as ET
import zipfile
from fractions import Fraction
from typing import Optional

from ..score import (
    DYNAMIC_MARKS, STEP_SEMITONES, DynamicEvent, HarmonicAnnotation, KeySignature,
    Lyric, Measure, Part, Score, ScoreValidationError, SpelledPitch, TempoEvent,
    merge_same_pitch_overlaps, validate_score,
)
from .common import (
    PARSER_VERSION, ParseError, TiedNote, check_pitch, decode_text, merge_ties,
    tempo_from_words, wrap_validation,
)

log = logging.getLogger(__name__)

BEAT_UNITS = {
    "maxima": Fraction(32), "long": Fraction(16), "breve": Fraction(8), "whole": Fraction(4),
    "half": Fraction(2), "quarter": Fraction(1), "eighth": Fraction(1, 2),
    "16th": Fraction(1, 4), "32nd": Fraction(1, 8), "64th": Fraction(1, 16),
}

HARMONY_KINDS = {
    "major": "", "minor": "m", "augmented": "aug", "diminished": "dim",
    "dominant": "7", "major-seventh": "maj7", "minor-seventh": "m7",
    "diminished-seventh": "dim7", "augmented-seventh": "aug7",
    "half-diminished": "m7b5", "major-minor": "mMaj7", "major-sixth": "6",
    "minor-sixth": "m6", "dominant-ninth": "9", "major-ninth": "maj9",
    "minor-ninth": "m9", "suspended-fourth": "sus4", "suspended-second": "sus2",
    "power": "5", "none": "",
}


def _strip_ns(root: ET.Element) -> ET.Element:
    for el in root.iter():
        if isinstance(el.tag, str) and "}" in el.tag:
            el.tag = el.tag.split("}", 1)[1]
    return root


def _unzip(data: bytes, path: str) -> bytes:
    try:
        with zipfile.ZipFile(io.BytesIO(data)) as zf:
            names = zf.namelist()
            root_name = None
            if "META-INF/container.xml" in names:
                container = _strip_ns(ET.fromstring(zf.read("META-INF/container.xml")))
                rootfile = container.find(".//rootfile")
                if rootfile is not None:
                    root_name = rootfile.get("full-path")
            if root_name is None:
                candidates = [n for n in names if n.lower().endswith((".xml", ".musicxml"))
                              and not n.startswith("META-INF/")]
                if not candidates:
                    raise ParseError(path, "malformed_header", "no score file in MXL container")
                root_name = candidates[0]
            return zf.read(posixpath.normpath(root_name))
    except ParseError:
        raise
    except (zipfile.BadZipFile, KeyError, ET.ParseError, OSError, ValueError,
            EOFError, RuntimeError, NotImplementedError) as exc:
        raise ParseError(path, "malformed_header", f"bad MXL container: {exc}") from exc


def _load_root(data: bytes, path: str) -> ET.Element:
    if data[:2] == b"PK":
        data = _unzip(data, path)
    try:
        root = ET.fromstring(data)
    except ET.ParseError:
        try:
            root = ET.fromstring(decode_text(data))
        except (ET.ParseError, ValueError) as exc:
            raise ParseError(path, "malformed_header", f"XML does not parse: {exc}") from exc
    except ValueError as exc:
        raise ParseError(path, "encoding", str(exc)) from exc
    return _strip_ns(root)


def _frac(text: Optional[str], path: str, what: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (AttributeError, ValueError, ZeroDivisionError) as exc:
        raise ParseError(path, "malformed_event", f"bad {what}: {text!r}") from exc


def _int(text, default=None):
    try:
        return int(round(float(text.strip())))
    except (AttributeError, ValueError, OverflowError):
        return default


def _parse_part(part_el: ET.Element, path: str, first: bool):
    """First pass over one part: notes and events at (measure ordinal, local offset)."""
    divisions = Fraction(1)
    num, den = 4, 4
    measures = []
    last_onset = Fraction(0)
    for m_el in part_el.findall("measure"):
        m = {"notes": [], "keys": [], "tempos": [], "dyns": [], "lyrics": [],
             "harm": [], "ts": None, "length": Fraction(0), "unknown_dyn": 0}
        cursor = Fraction(0)
        reach = Fraction(0)
        for el in m_el:
            tag = el.tag
            if tag == "attributes":
                d = el.find("divisions")
                if d is not None:
                    divisions = _frac(d.text, path, "divisions")
                    if divisions <= 0:
                        raise ParseError(path, "malformed_event", "divisions must be positive")
                for t in el.findall("time"):
                    beats, btype = t.find("beats"), t.find("beat-type")
                    if beats is not None and btype is not None:
                        try:
                            n = sum(int(x) for x in beats.text.split("+"))
                            dd = int(btype.text)
                        except (AttributeError, ValueError):
                            continue
                        if 0 < n <= 64 and dd in (1, 2, 4, 8, 16, 32, 64):
                            num, den = n, dd
                            if cursor == 0:
                                m["ts"] = (num, den)
                if first:
                    for k in el.findall("key"):
                        fifths = _int(getattr(k.find("fifths"), "text", None))
                        if fifths is not None and -7 <= fifths <= 7:
                            mode_el = k.find("mode")
                            m["keys"].append((cursor, fifths,
                                              mode_el.text.strip() if mode_el is not None and mode_el.text else None))
            elif tag == "backup":
                cursor -= _frac(getattr(el.find("duration"), "text", None), path, "backup") / divisions
                if cursor < 0:
                    cursor = Fraction(0)
            elif tag == "forward":
                cursor += _frac(getattr(el.find("duration"), "text", None), path, "forward") / divisions
                reach = max(reach, cursor)
            elif tag == "direction":
                _direction(el, cursor, m, first)
            elif tag == "harmony":
                label = _harmony_label(el)
                if label:
                    off = el.find("offset")
                    beat = cursor + (_frac(off.text, path, "offset") / divisions if off is not None else 0)
                    m["harm"].append((max(beat, Fraction(0)), label))
            elif tag == "note":
                is_chord = el.find("chord") is not None
                is_grace = el.find("grace") is not None
                onset = last_onset if is_chord else cursor
                if el.find("rest") is not None:
                    if not is_grace and not is_chord:
                        dur = el.find("duration")
                        cursor += _frac(getattr(dur, "text", "0"), path, "duration") / divisions
                        reach = max(reach, cursor)
                    continue
                pitch_el = el.find("pitch")
                if pitch_el is None:
                    pitch_el = el.find("unpitched")
                    prefix = "display-"
                else:
                    prefix = ""
                if pitch_el is None:
                    raise ParseError(path, "malformed_event", "note without pitch or rest")
                step = getattr(pitch_el.find(prefix + "step"), "text", "")
                step = (step or "").strip().upper()
                octave = _int(getattr(pitch_el.find(prefix + "octave"), "text", None))
                alter = _int(getattr(pitch_el.find("alter"), "text", None), 0) if not prefix else 0
                if step not in STEP_SEMITONES or octave is None or not -2 <= alter <= 2:
                    raise ParseError(path, "malformed_event", "incomplete pitch")
                spelled = SpelledPitch(step, alter, octave)
                midi = check_pitch(spelled.semitone, path)
                if is_grace:
                    dur = Fraction(0)
                else:
                    dur_el = el.find("duration")
                    if dur_el is None:
                        raise ParseError(path, "malformed_event", "note without duration")
                    dur = _frac(dur_el.text, path, "duration") / divisions
                ties = {t.get("type") for t in el.findall("tie")}
                if not is_grace and dur <= 0:
                    log.debug("%s: skipping zero-length note", path)
                    continue
                m["notes"].append(TiedNote(onset, dur, midi, 0, spelled, is_grace,
                                           "start" in ties, "stop" in ties))
                lyric = el.find("lyric")
                if lyric is not None and not is_grace:
                    text = _lyric_text(lyric)
                    if text:
                        m["lyrics"].append((onset, text))
                last_onset = onset
                if not is_chord and not is_grace:
                    cursor += dur
                    reach = max(reach, cursor)
        m["length"] = reach
        m["nominal"] = Fraction(4 * num, den)
        m["cur_ts"] = (num, den)
        measures.append(m)
    return measures


def _direction(el, cursor, m, first):
    for dt in el.findall("direction-type"):
        dyn = dt.find("dynamics")
        if dyn is not None:
            for mark in dyn:
                if mark.tag in DYNAMIC_MARKS:
                    m["dyns"].append((cursor, mark.tag))
                else:
                    m["unknown_dyn"] += 1
        if not first:
            continue
        met = dt.find("metronome")
        if met is not None:
            unit = BEAT_UNITS.get(getattr(met.find("beat-unit"), "text", "").strip())
            per_minute = getattr(met.find("per-minute"), "text", None)
            try:
                pm = float(per_minute) if per_minute else None
            except ValueError:
                pm = None
            if unit is not None and pm and pm > 0:
                if met.find("beat-unit-dot") is not None:
                    unit = unit * Fraction(3, 2)
                m["tempos"].append((cursor, pm * float(unit), "metronome_mark"))
        words = dt.find("words")
        if words is not None and words.text:
            bpm = tempo_from_words(words.text)
            if bpm is not None:
                m["tempos"].append((cursor, bpm, "tempo_word"))


def _lyric_text(lyric: ET.Element) -> str:
    text = "".join(t.text or "" for t in lyric.findall("text")).strip()
    if not text:
        return ""
    syllabic = getattr(lyric.find("syllabic"), "text", "single")
    if syllabic == "begin":
        return text + "-"
    if syllabic == "middle":
        return "-" + text + "-"
    if syllabic == "end":
        return "-" + text
    return text


def _harmony_label(el: ET.Element) -> str:
    root = el.find("root")
    if root is None:
        return ""
    step = (getattr(root.find("root-step"), "text", "") or "").strip()
    if not step:
        return ""
    alter = _int(getattr(root.find("root-alter"), "text", None), 0)
    acc = "#" * alter if alter > 0 else "b" * (-alter)
    kind_el = el.find("kind")
    kind = (kind_el.text or "").strip() if kind_el is not None else "major"
    return step + acc + HARMONY_KINDS.get(kind, kind)


def parse_musicxml(data: bytes, path: str = "") -> Score:
    """Parse a partwise MusicXML document (or MXL container) into a :class:`Score`.

    Harmony elements found in the score are kept on ``Score.harmonies`` as
    chord-symbol annotations with an empty local key.
    """
    root = _load_root(data, path)
    if root.tag == "score-timewise":
        raise ParseError(path, "unsupported_construct", "timewise MusicXML")
    if root.tag != "score-partwise":
        raise ParseError(path, "malformed_header", f"unexpected root element <{root.tag}>")

    info = {}
    for sp in root.iter("score-part"):
        name = (getattr(sp.find("part-name"), "text", "") or "").strip()
        prog = _int(getattr(sp.find("midi-instrument/midi-program"), "text", None))
        chan = _int(getattr(sp.find("midi-instrument/midi-channel"), "text", None))
        info[sp.get("id")] = (name, None if prog is None else min(max(prog - 1, 0), 127), chan)

    part_els = root.findall("part")
    raw_parts = [_parse_part(p, path, i == 0) for i, p in enumerate(part_els)]

    n_measures = max((len(ms) for ms in raw_parts), default=0)
    starts = []
    measure_map = []
    t = Fraction(0)
    ts = (4, 4)
    for k in range(n_measures):
        length = max((ms[k]["length"] for ms in raw_parts if k < len(ms)), default=Fraction(0))
        first = raw_parts[0][k] if k < len(raw_parts[0]) else None
        if first is not None:
            ts = first["ts"] or first["cur_ts"]
        if length <= 0:
            length = Fraction(4 * ts[0], ts[1])
        measure_map.append(Measure(k + 1, t, ts[0], ts[1]))
        starts.append(t)
        t += length
    if not measure_map:
        measure_map.append(Measure(1, Fraction(0), 4, 4))
        starts.append(Fraction(0))

    parts = []
    keys, tempos, dyns, harms = {}, {}, [], []
    unknown = 0
    for i, (p_el, ms) in enumerate(zip(part_els, raw_parts)):
        raw_notes = []
        lyrics = {}
        for k, m in enumerate(ms):
            base = starts[k]
            for n in m["notes"]:
                n.onset += base
                n.measure = bisect.bisect_right(starts, n.onset)
                raw_notes.append(n)
            for off, text in m["lyrics"]:
                lyrics.setdefault(base + off, text)
            for off, fifths, mode in m["keys"]:
                keys.setdefault(base + off, KeySignature(base + off, fifths, mode))
            for off, bpm, source in m["tempos"]:
                tempos.setdefault((base + off, source), TempoEvent(base + off, bpm, source))
            for off, mark in m["dyns"]:
                dyns.append(DynamicEvent(base + off, i, mark))
            for off, label in m["harm"]:
                harms.append(HarmonicAnnotation(k + 1, off, label, ""))
            unknown += m["unknown_dyn"]
        notes = merge_same_pitch_overlaps(merge_ties(raw_notes))
        onsets = {n.onset for n in notes}
        name, prog, chan = info.get(p_el.get("id"), ("", None, None))
        parts.append(Part(
            index=i, name=name, midi_program=prog, notes=tuple(notes),
            lyrics=tuple(Lyric(o, tx) for o, tx in sorted(lyrics.items()) if o in onsets),
            percussion=(chan == 10),
        ))

    score = Score(
        parts=tuple(parts),
        measure_map=tuple(measure_map),
        key_signatures=tuple(sorted(keys.values())),
        tempo_events=tuple(sorted(tempos.values())),
        dynamic_events=tuple(sorted(dyns)),
        source_format="musicxml",
        source_path=path,
        parser_version=PARSER_VERSION,
        unknown_dynamics=unknown,
        harmonies=tuple(sorted(set(harms))),
    )
    try:
        return validate_score(score)
    except ScoreValidationError as exc:
        raise wrap_validation(path, exc) from exc

"""Format-agnostic in-memory score model.

Every parser produces a :class:`Score`; every feature group consumes one.
Onsets and durations are exact :class:`fractions.Fraction` quarter-note
values so that tick-based and divisions-based sources compare exactly.
Floats only appear when features are emitted (see :attr:`Score.arrays`).
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np

SOURCE_FORMATS = ("midi", "musicxml", "kern")
TEMPO_SOURCES = ("midi_meta", "metronome_mark", "tempo_word")
DYNAMIC_MARKS = ("ppp", "pp", "p", "mp", "mf", "f", "ff", "fff")

STEP_SEMITONES = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}


class ScoreValidationError(ValueError):
    """Raised when a score violates one of the model invariants."""


class SpelledPitch(NamedTuple):
    step: str
    alter: int
    octave: int

    @property
    def semitone(self) -> int:
        """MIDI number implied by the spelling (C4 = 60)."""
        return 12 * (self.octave + 1) + STEP_SEMITONES[self.step] + self.alter


class NoteEvent(NamedTuple):
    onset: Fraction
    duration: Fraction
    midi_pitch: int
    measure_index: int
    spelled_pitch: Optional[SpelledPitch] = None
    velocity: Optional[int] = None
    grace: bool = False
    tie_to_next: bool = False

    @property
    def end(self) -> Fraction:
        return self.onset + self.duration


class Measure(NamedTuple):
    index: int
    start: Fraction
    numerator: int
    denominator: int

    @property
    def nominal_length(self) -> Fraction:
        return Fraction(4 * self.numerator, self.denominator)


class KeySignature(NamedTuple):
    onset: Fraction
    fifths: int
    mode: Optional[str] = None


class TempoEvent(NamedTuple):
    onset: Fraction
    bpm: float
    source: str


class DynamicEvent(NamedTuple):
    onset: Fraction
    part_index: int
    mark: str


class Lyric(NamedTuple):
    """One syllable. Hyphenation is carried kern-style: ``"A-"``, ``"-ve"``."""

    onset: Fraction
    text: str


class HarmonicAnnotation(NamedTuple):
    measure_index: int
    beat: Fraction
    label: str
    local_key: str


@dataclass(frozen=True)
class Part:
    index: int
    name: str = ""
    midi_program: Optional[int] = None
    notes: tuple[NoteEvent, ...] = ()
    lyrics: tuple[Lyric, ...] = ()
    percussion: bool = False


@dataclass(frozen=True)
class NoteArrays:
    """Flat float views over all notes of a score, pooled across parts."""

    onset: np.ndarray
    duration: np.ndarray
    pitch: np.ndarray
    part: np.ndarray
    grace: np.ndarray
    velocity: np.ndarray  # NaN where absent
    measure: np.ndarray

    def __len__(self) -> int:
        return len(self.pitch)


@dataclass(frozen=True)
class Score:
    parts: tuple[Part, ...] = ()
    measure_map: tuple[Measure, ...] = ()
    key_signatures: tuple[KeySignature, ...] = ()
    tempo_events: tuple[TempoEvent, ...] = ()
    dynamic_events: tuple[DynamicEvent, ...] = ()
    source_format: str = "midi"
    source_path: str = ""
    parser_version: str = ""
    unknown_dynamics: int = 0
    harmonies: tuple[HarmonicAnnotation, ...] = ()  # embedded in the source file, if any

    @property
    def notes(self) -> list[NoteEvent]:
        return [n for p in self.parts for n in p.notes]

    @cached_property
    def arrays(self) -> NoteArrays:
        rows = [
            (float(n.onset), float(n.duration), n.midi_pitch, p.index, n.grace,
             np.nan if n.velocity is None else n.velocity, n.measure_index)
            for p in self.parts for n in p.notes
        ]
        if rows:
            cols = list(zip(*rows))
        else:
            cols = [()] * 7
        return NoteArrays(
            onset=np.asarray(cols[0], dtype=float),
            duration=np.asarray(cols[1], dtype=float),
            pitch=np.asarray(cols[2], dtype=np.int64),
            part=np.asarray(cols[3], dtype=np.int64),
            grace=np.asarray(cols[4], dtype=bool),
            velocity=np.asarray(cols[5], dtype=float),
            measure=np.asarray(cols[6], dtype=np.int64),
        )

    @cached_property
    def measure_starts(self) -> dict[int, Fraction]:
        return {m.index: m.start for m in self.measure_map}


def total_span(score: Score) -> Fraction:
    """End of the last sounding note in quarters, 0 for an empty score."""
    return max((n.onset + n.duration for p in score.parts for n in p.notes),
               default=Fraction(0))


def sounding_count(score: Score, t) -> int:
    """Number of non-grace notes with ``onset <= t < onset + duration``."""
    t = Fraction(t)
    return sum(1 for p in score.parts for n in p.notes
               if not n.grace and n.onset <= t < n.onset + n.duration)


def measure_for_onset(measure_map, onset) -> int:
    """Index of the measure containing ``onset`` (the last one starting at or before it)."""
    starts = [m.start for m in measure_map]
    i = bisect.bisect_right(starts, onset) - 1
    return measure_map[max(i, 0)].index


def note_sort_key(n: NoteEvent):
    return (n.onset, n.midi_pitch)


def validate_score(score: Score) -> Score:
    """Check every model invariant, raising :class:`ScoreValidationError` on the first violation."""
    if score.source_format not in SOURCE_FORMATS:
        raise ScoreValidationError(f"unknown source format {score.source_format!r}")
    mm = score.measure_map
    if not mm:
        if any(p.notes for p in score.parts):
            raise ScoreValidationError("notes present but measure map is empty")
    else:
        if mm[0].index != 1 or mm[0].start != 0:
            raise ScoreValidationError("measure map must start at measure 1, onset 0")
        for a, b in zip(mm, mm[1:]):
            if b.start <= a.start:
                raise ScoreValidationError(
                    f"measure starts not strictly increasing at measure {b.index}")
            if b.index != a.index + 1:
                raise ScoreValidationError(f"measure indices not consecutive at {b.index}")
    starts = {m.index: m.start for m in mm}
    last = mm[-1].index if mm else 0
    for part in score.parts:
        prev = None
        for n in part.notes:
            if not 0 <= n.midi_pitch <= 127:
                raise ScoreValidationError(f"pitch {n.midi_pitch} out of range 0-127")
            if n.onset < 0:
                raise ScoreValidationError(f"negative onset {n.onset}")
            if n.grace:
                if n.duration != 0:
                    raise ScoreValidationError("grace notes must have duration 0")
            elif n.duration <= 0:
                raise ScoreValidationError(f"non-grace note with duration {n.duration}")
            if n.spelled_pitch is not None and \
                    n.spelled_pitch.semitone % 12 != n.midi_pitch % 12:
                raise ScoreValidationError(
                    f"spelling {n.spelled_pitch} disagrees with pitch {n.midi_pitch}")
            if n.velocity is not None and not 1 <= n.velocity <= 127:
                raise ScoreValidationError(f"velocity {n.velocity} out of range 1-127")
            start = starts.get(n.measure_index)
            if start is None:
                raise ScoreValidationError(
                    f"measure index {n.measure_index} not in measure map")
            if n.onset < start or (n.measure_index < last
                                   and n.onset >= starts[n.measure_index + 1]):
                raise ScoreValidationError(
                    f"onset {n.onset} outside measure {n.measure_index}")
            key = note_sort_key(n)
            if prev is not None and key < prev:
                raise ScoreValidationError(f"notes of part {part.index} are not sorted")
            prev = key
        onsets = {n.onset for n in part.notes}
        for ly in part.lyrics:
            if ly.onset not in onsets:
                raise ScoreValidationError(
                    f"lyric {ly.text!r} at {ly.onset} has no note onset in part {part.index}")
    for ev in score.tempo_events:
        if not ev.bpm > 0 or ev.source not in TEMPO_SOURCES:
            raise ScoreValidationError(f"invalid tempo event {ev}")
    for ev in score.dynamic_events:
        if ev.mark not in DYNAMIC_MARKS:
            raise ScoreValidationError(f"invalid dynamic mark {ev.mark!r}")
    for ks in score.key_signatures:
        if not -7 <= ks.fifths <= 7:
            raise ScoreValidationError(f"key signature fifths {ks.fifths} out of range")
    return score


def merge_same_pitch_overlaps(notes: list[NoteEvent]) -> list[NoteEvent]:
    """Resolve overlapping notes of identical pitch within one part.

    Of two overlapping same-pitch notes the longer one is kept (earlier on a
    tie). Grace notes are never merged.
    """
    notes = sorted(notes, key=note_sort_key)
    active: dict[int, int] = {}  # pitch -> position in `out`
    out: list[Optional[NoteEvent]] = []
    for n in notes:
        if n.grace:
            out.append(n)
            continue
        j = active.get(n.midi_pitch)
        if j is not None and out[j] is not None and n.onset < out[j].end:
            if n.duration > out[j].duration:
                out[j] = None
            else:
                continue
        active[n.midi_pitch] = len(out)
        out.append(n)
    return [n for n in out if n is not None]


MAX_MEASURES = 100_000


def build_measure_map(time_signatures, span) -> tuple[Measure, ...]:
    """Lay out measures from ``(onset, num, den)`` time-signature changes until ``span``.

    Always yields at least one measure. A time-signature change not on a
    barline starts a new (shortened) measure at its onset.
    """
    ts = sorted(time_signatures, key=lambda x: x[0]) or [(Fraction(0), 4, 4)]
    if ts[0][0] != 0:
        ts.insert(0, (Fraction(0), 4, 4))
    measures = []
    t = Fraction(0)
    k = 0
    while True:
        while k + 1 < len(ts) and ts[k + 1][0] <= t:
            k += 1
        _, num, den = ts[k]
        measures.append(Measure(len(measures) + 1, t, num, den))
        if len(measures) > MAX_MEASURES:
            raise ScoreValidationError(f"more than {MAX_MEASURES} measures")
        nxt = t + Fraction(4 * num, den)
        if k + 1 < len(ts) and ts[k + 1][0] < nxt:
            nxt = ts[k + 1][0]
        t = nxt
        if t >= span:
            break
    return tuple(measures)

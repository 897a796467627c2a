from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from symfeat.score import (
    Lyric, Measure, NoteEvent, Part, Score, ScoreValidationError, SpelledPitch,
    build_measure_map, merge_same_pitch_overlaps, sounding_count, total_span, validate_score,
)
from symfeat.synth import make_score

F = Fraction


def _one_part(notes, measures=((1, 0, 4, 4),)):
    return Score(parts=(Part(0, notes=tuple(notes)),),
                 measure_map=tuple(Measure(i, F(s), n, d) for i, s, n, d in measures))


def test_total_span_examples():
    assert total_span(_one_part([NoteEvent(F(0), F(4), 60, 1)])) == 4
    assert total_span(Score()) == 0
    s = _one_part([NoteEvent(F(0), F(1), 60, 1), NoteEvent(F(2), F(2), 62, 1)])
    assert total_span(s) == 4


def test_sounding_count_examples():
    s = make_score([{"notes": [(0, 4, 60)]}, {"notes": [(0, 4, 64)]}])
    assert sounding_count(s, 1) == 2
    assert sounding_count(s, 4) == 0
    assert sounding_count(Score(), 0) == 0


def test_grace_notes_do_not_sound():
    s = make_score([{"notes": [(0, 0, 59), (0, 1, 60)]}])
    assert sounding_count(s, 0) == 1


@pytest.mark.parametrize("notes, measures, match", [
    ([NoteEvent(F(1), F(1), 60, 1), NoteEvent(F(0), F(1), 62, 1)], None, "sorted"),
    ([NoteEvent(F(4), F(1), 60, 1)], None, "outside measure"),
    ([NoteEvent(F(0), F(0), 60, 1)], None, "duration"),
    ([NoteEvent(F(0), F(-1), 60, 1)], None, "duration"),
    ([NoteEvent(F(0), F(1), 128, 1)], None, "pitch"),
    ([NoteEvent(F(0), F(1), 60, 3)], None, "measure index"),
    ([NoteEvent(F(0), F(1), 61, 1, SpelledPitch("C", 0, 4))], None, "spelling"),
    ([NoteEvent(F(0), F(1), 60, 1, velocity=0)], None, "velocity"),
    ([NoteEvent(F(0), F(1), 60, 1, grace=True)], None, "grace"),
    ([], ((2, 0, 4, 4),), "measure 1"),
    ([], ((1, 0, 4, 4), (2, 0, 4, 4)), "strictly increasing"),
])
def test_validator_rejects_each_violation(notes, measures, match):
    measures = measures or ((1, 0, 4, 4), (2, 4, 4, 4))
    with pytest.raises(ScoreValidationError, match=match):
        validate_score(_one_part(notes, measures))


def test_validator_rejects_orphan_lyric():
    s = Score(parts=(Part(0, notes=(NoteEvent(F(0), F(1), 60, 1),),
                          lyrics=(Lyric(F(1, 2), "la"),)),),
              measure_map=(Measure(1, F(0), 4, 4),))
    with pytest.raises(ScoreValidationError, match="lyric"):
        validate_score(s)


def test_merge_overlaps_longest_wins():
    a = NoteEvent(F(0), F(1), 60, 1)
    b = NoteEvent(F(1, 2), F(2), 60, 1)
    assert merge_same_pitch_overlaps([a, b]) == [b]
    c = NoteEvent(F(1, 2), F(1, 2), 60, 1)
    assert merge_same_pitch_overlaps([a, c]) == [a]
    # touching notes are not overlapping
    d = NoteEvent(F(1), F(1), 60, 1)
    assert merge_same_pitch_overlaps([a, d]) == [a, d]


def test_build_measure_map_time_signature_change():
    mm = build_measure_map([(F(0), 4, 4), (F(4), 3, 4)], F(10))
    assert [(m.index, m.start, m.numerator) for m in mm] == [(1, 0, 4), (2, 4, 3), (3, 7, 3)]
    assert len(build_measure_map([], F(0))) == 1


note_tuples = st.lists(
    st.tuples(st.integers(0, 47), st.integers(1, 8), st.integers(21, 108)),
    min_size=0, max_size=30)


@given(note_tuples, st.integers(1, 3))
def test_generated_scores_validate_and_span_is_order_free(raw, n_parts):
    parts = [{"notes": [(F(o, 4), F(d, 4), p) for o, d, p in raw[k::n_parts]]}
             for k in range(n_parts)]
    s = make_score(parts)
    validate_score(s)
    flipped = make_score(list(reversed(parts)))
    assert total_span(s) == total_span(flipped)


@given(note_tuples, st.integers(0, 60), st.integers(1, 8), st.integers(0, 47))
def test_inserting_covering_note_adds_one(raw, pitch, dur, t16):
    s = make_score([{"notes": [(F(o, 4), F(d, 4), p) for o, d, p in raw]}])
    t = F(t16, 4)
    extra = make_score([{"notes": [(t, F(dur, 4), pitch)]}])
    combined = Score(parts=s.parts + tuple(Part(1, notes=p.notes) for p in extra.parts),
                     measure_map=s.measure_map)
    assert sounding_count(combined, t) == sounding_count(s, t) + 1

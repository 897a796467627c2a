import io
import pickle
import struct
import zipfile
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from symfeat.parsers import ParseError, parse_annotations, parse_bytes
from symfeat.parsers.kern import parse_kern
from symfeat.parsers.midi import parse_midi
from symfeat.parsers.musicxml import parse_musicxml
from symfeat.score import SpelledPitch
from symfeat.synth import conformance_scores, to_kern, to_midi, to_musicxml


def smf(tracks, fmt=0, division=480):
    out = b"MThd" + struct.pack(">IHHH", 6, fmt, len(tracks), division)
    for body in tracks:
        out += b"MTrk" + struct.pack(">I", len(body)) + body
    return out


ON_OFF = bytes([0x00, 0x90, 60, 64, 0x83, 0x60, 0x80, 60, 0, 0x00, 0xFF, 0x2F, 0x00])
ON_VEL0 = bytes([0x00, 0x90, 60, 64, 0x83, 0x60, 0x90, 60, 0, 0x00, 0xFF, 0x2F, 0x00])


# --- MIDI ---------------------------------------------------------------

def test_midi_single_note():
    s = parse_midi(smf([ON_OFF]), "a.mid")
    (n,) = s.notes
    assert (n.onset, n.duration, n.midi_pitch, n.velocity) == (0, 1, 60, 64)
    assert n.spelled_pitch is None and s.parts[0].midi_program == 0


def test_midi_velocity_zero_is_note_off():
    assert parse_midi(smf([ON_VEL0])).notes == parse_midi(smf([ON_OFF])).notes


def test_midi_running_status():
    body = bytes([0x00, 0x90, 60, 64, 0x00, 64, 70, 0x83, 0x60, 60, 0, 0x00, 64, 0,
                  0x00, 0xFF, 0x2F, 0x00])
    s = parse_midi(smf([body]))
    assert sorted(n.midi_pitch for n in s.notes) == [60, 64]


def test_midi_bad_magic():
    with pytest.raises(ParseError) as ei:
        parse_midi(b"MThx" + smf([ON_OFF])[4:])
    assert ei.value.kind == "malformed_header"


def test_midi_smpte_and_format2():
    with pytest.raises(ParseError) as ei:
        parse_midi(smf([ON_OFF], division=0xE728))
    assert ei.value.kind == "malformed_header"
    with pytest.raises(ParseError) as ei:
        parse_midi(smf([ON_OFF], fmt=2))
    assert ei.value.kind == "unsupported_construct"


def test_midi_truncated_event():
    with pytest.raises(ParseError) as ei:
        parse_midi(smf([bytes([0x00, 0x90, 60])]))
    assert ei.value.kind == "malformed_event"


def test_midi_meta_events():
    body = bytes([0x00, 0xFF, 0x03, 0x05]) + b"Viola" \
        + bytes([0x00, 0xFF, 0x51, 0x03, 0x07, 0xA1, 0x20]) \
        + bytes([0x00, 0xFF, 0x58, 0x04, 0x03, 0x02, 0x18, 0x08]) \
        + bytes([0x00, 0xFF, 0x59, 0x02, 0xFE, 0x01]) \
        + bytes([0x00, 0xC0, 41]) \
        + bytes([0x00, 0xFF, 0x05, 0x02]) + b"la" + ON_OFF
    s = parse_midi(smf([body]))
    assert s.parts[0].name == "Viola" and s.parts[0].midi_program == 41
    assert s.tempo_events[0].bpm == pytest.approx(120.0)
    assert s.tempo_events[0].source == "midi_meta"
    assert (s.measure_map[0].numerator, s.measure_map[0].denominator) == (3, 4)
    assert (s.key_signatures[0].fifths, s.key_signatures[0].mode) == (-2, "minor")
    assert [ly.text for ly in s.parts[0].lyrics] == ["la"]


def test_midi_percussion_channel_flagged():
    body = bytes([0x00, 0x99, 36, 100, 0x60, 0x89, 36, 0, 0x00, 0xFF, 0x2F, 0x00])
    assert parse_midi(smf([body])).parts[0].percussion


def test_midi_track_order_irrelevant():
    score = conformance_scores()[7][1]
    data = to_midi(score)
    # swap the last two track chunks
    pos, chunks = 14, []
    while pos < len(data):
        ln = struct.unpack(">I", data[pos + 4:pos + 8])[0]
        chunks.append(data[pos:pos + 8 + ln])
        pos += 8 + ln
    swapped = data[:14] + b"".join(chunks[:-2] + [chunks[-1], chunks[-2]])
    a, b = parse_midi(data), parse_midi(swapped)
    key = lambda s: sorted((n.onset, n.duration, n.midi_pitch) for n in s.notes)  # noqa: E731
    assert key(a) == key(b) and a.tempo_events == b.tempo_events


# --- MusicXML -----------------------------------------------------------

def xml_doc(measure_body, divisions=2):
    return f"""<?xml version="1.0"?>
<score-partwise version="3.1"><part-list><score-part id="P1"><part-name>Violino I</part-name>
</score-part></part-list><part id="P1"><measure number="1"><attributes>
<divisions>{divisions}</divisions></attributes>{measure_body}</measure></part></score-partwise>""".encode()


def note(step="C", octave=4, dur=2, extra=""):
    return (f"<note>{extra}<pitch><step>{step}</step><octave>{octave}</octave></pitch>"
            f"<duration>{dur}</duration></note>")


def test_musicxml_minimal_note():
    s = parse_musicxml(xml_doc(note()))
    (n,) = s.notes
    assert n.midi_pitch == 60 and n.duration == 1 and n.spelled_pitch == SpelledPitch("C", 0, 4)


def test_musicxml_chord_shares_onset():
    s = parse_musicxml(xml_doc(note() + note("E", extra="<chord/>")))
    assert [n.onset for n in s.notes] == [0, 0]


def test_musicxml_note_without_pitch():
    with pytest.raises(ParseError) as ei:
        parse_musicxml(xml_doc("<note><duration>2</duration></note>"))
    assert ei.value.kind == "malformed_event"


def test_musicxml_bad_xml_and_timewise():
    with pytest.raises(ParseError) as ei:
        parse_musicxml(b"<score-partwise><part>")
    assert ei.value.kind == "malformed_header"
    with pytest.raises(ParseError) as ei:
        parse_musicxml(b"<score-timewise/>")
    assert ei.value.kind == "unsupported_construct"


def test_musicxml_ties_rests_grace_and_marks():
    body = ("<direction><direction-type><dynamics><pp/></dynamics></direction-type></direction>"
            "<direction><direction-type><metronome><beat-unit>quarter</beat-unit>"
            "<per-minute>80</per-minute></metronome></direction-type></direction>"
            + note(extra="<grace/>").replace("<duration>2</duration>", "")
            + note(dur=2).replace("</duration>", "</duration><tie type=\"start\"/>")
            + note(dur=2).replace("</duration>", "</duration><tie type=\"stop\"/>")
            + "<note><rest/><duration>4</duration></note>")
    s = parse_musicxml(xml_doc(body))
    grace = [n for n in s.notes if n.grace]
    real = [n for n in s.notes if not n.grace]
    assert len(grace) == 1 and grace[0].duration == 0
    assert [(n.onset, n.duration) for n in real] == [(0, 2)]
    assert s.dynamic_events[0].mark == "pp"
    assert s.tempo_events[0].bpm == 80 and s.tempo_events[0].source == "metronome_mark"
    assert s.measure_map[-1].start == 0 and len(s.measure_map) == 1


def test_mxl_container():
    inner = xml_doc(note())
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as z:
        z.writestr("META-INF/container.xml",
                   '<container><rootfiles><rootfile full-path="score/s.xml"/></rootfiles></container>')
        z.writestr("score/s.xml", inner)
    s = parse_bytes(buf.getvalue(), "musicxml", "x.mxl")
    assert s.notes[0].midi_pitch == 60


def test_musicxml_harmony_kept_on_score():
    body = ("<harmony><root><root-step>G</root-step></root><kind>dominant</kind></harmony>"
            + note())
    s = parse_musicxml(xml_doc(body))
    assert len(s.harmonies) == 1 and s.harmonies[0].label.startswith("G")
    assert s.harmonies[0].local_key == ""


# --- kern ---------------------------------------------------------------

def test_kern_single_note():
    s = parse_kern("**kern\n*M4/4\n=1\n4c\n*-")
    (n,) = s.notes
    assert (n.midi_pitch, n.duration, n.measure_index) == (60, 1, 1)


def test_kern_rest_advances_cursor():
    s = parse_kern("**kern\n8r\n4d\n*-")
    assert s.notes[0].onset == Fraction(1, 2)


def test_kern_spine_split_unsupported():
    with pytest.raises(ParseError) as ei:
        parse_kern("**kern\n*^\n4c\t4d\n*-")
    assert ei.value.kind == "unsupported_construct"


def test_kern_bad_token():
    with pytest.raises(ParseError) as ei:
        parse_kern("**kern\n4cz\n*-")
    assert ei.value.kind == "malformed_event"


def test_kern_octaves_ties_chords_keys():
    text = "\n".join(["**kern\t**kern", "*k[f#]\t*k[f#]", "*G:\t*G:", "*M3/4\t*M3/4",
                      "[2cc\t4C 4E", ".\t4GG", "=2\t=2", "4cc]\t2.D-", "2b-\t.", "==\t==",
                      "*-\t*-"])
    s = parse_kern(text)
    top = s.parts[0].notes
    assert [(n.midi_pitch, n.duration) for n in top] == [(72, 3), (70, 2)]
    assert sorted(n.midi_pitch for n in s.parts[1].notes) == [43, 48, 49, 52]
    assert (s.key_signatures[0].fifths, s.key_signatures[0].mode) == (1, "major")
    assert [m.start for m in s.measure_map] == [0, 2]  # measure length follows content


def test_kern_editorial_marks_ignored():
    s = parse_kern("**kern\n4cX\n4dy\n!! comment\n*-")
    assert [n.midi_pitch for n in s.notes] == [60, 62]


def test_kern_dynam_and_text_spines():
    text = "**kern\t**dynam\t**text\n4c\tp\tA-\n4d\t.\t-ve\n*-\t*-\t*-"
    s = parse_kern(text)
    assert [d.mark for d in s.dynamic_events] == ["p"]
    assert [ly.text for ly in s.parts[0].lyrics] == ["A-", "-ve"]


def test_kern_latin1_fallback():
    s = parse_kern("**kern\t**text\n4c\tcaf\xe9\n*-\t*-".encode("latin-1"))
    assert s.parts[0].lyrics[0].text == "caf\xe9"


# --- annotations --------------------------------------------------------

def test_annotations_examples():
    got = parse_annotations("measure\tbeat\tlabel\tlocalkey\n1\t0\tI\tC\n1\t2\tV\tC")
    assert [a.label for a in got] == ["I", "V"]
    assert parse_annotations("measure\tbeat\tlabel\tlocalkey\n") == []
    with pytest.raises(ParseError) as ei:
        parse_annotations("measure\tbeat\tlabel\tlocalkey\nx\t0\tI\tC")
    assert ei.value.kind == "malformed_event"


def test_parse_error_pickles():
    e = ParseError("a.mid", "io", "gone", 3)
    e2 = pickle.loads(pickle.dumps(e))
    assert (e2.path, e2.kind, e2.detail, e2.byte_or_line) == ("a.mid", "io", "gone", 3)
    assert e.retryable and not ParseError("a", "encoding", "x").retryable


# --- cross-format round trip ---------------------------------------------

@pytest.mark.parametrize("name, score", conformance_scores(), ids=lambda v: v if isinstance(v, str) else "")
def test_conformance_round_trip(name, score):
    want = sorted((n.onset, n.duration, n.midi_pitch) for n in score.notes)
    ts = [(m.start, m.numerator, m.denominator) for m in score.measure_map]
    for fmt, data in (("midi", to_midi(score)), ("musicxml", to_musicxml(score)),
                      ("kern", to_kern(score).encode())):
        got = parse_bytes(data, fmt, name)
        assert sorted((n.onset, n.duration, n.midi_pitch) for n in got.notes) == want, fmt
        assert [(m.start, m.numerator, m.denominator) for m in got.measure_map] == ts, fmt


# --- fuzz ---------------------------------------------------------------

SEEDS = [to_midi(conformance_scores()[1][1]), to_musicxml(conformance_scores()[5][1]),
         to_kern(conformance_scores()[3][1]).encode()]


def _mutate(data: bytes, edits) -> bytes:
    b = bytearray(data)
    for pos, val in edits:
        if b:
            b[pos % len(b)] = val
    return bytes(b)


@pytest.mark.parametrize("fmt", ["midi", "musicxml", "kern"])
@given(st.binary(max_size=400))
def test_random_bytes_never_panic(fmt, data):
    try:
        parse_bytes(data, fmt, "fuzz")
    except ParseError:
        pass


@pytest.mark.parametrize("fmt, seed", list(zip(["midi", "musicxml", "kern"], SEEDS)))
@given(edits=st.lists(st.tuples(st.integers(0, 10**6), st.integers(0, 255)), max_size=8),
       cut=st.integers(0, 10**6))
def test_mutated_files_never_panic(fmt, seed, edits, cut):
    data = _mutate(seed, edits)
    data = data[:max(1, cut % (len(data) + 1))]
    try:
        parse_bytes(data, fmt, "fuzz")
    except ParseError:
        pass

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from symfeat.table import FeatureTable, TableError, parse_csv_text, read_csv, to_csv_text, write_csv


def test_formatting_example():
    t = FeatureTable(["Pitch_Mean", "Pitch_Range"], ["a.mid"], [0], [0],
                     np.array([[191 / 3, 7.0]]))
    lines = to_csv_text(t).split("\r\n")
    assert lines[0] == "file_id,window_start,window_end,Pitch_Mean,Pitch_Range"
    assert lines[1] == "a.mid,0,0,63.666666666666664,7"


def test_nan_is_empty_field_and_columns_sorted():
    t = FeatureTable(["b", "a"], ["x"], [1], [4], np.array([[np.nan, 2.0]]))
    assert to_csv_text(t).split("\r\n")[1] == "x,1,4,2,"


def test_empty_table_is_header_only(tmp_path):
    t = FeatureTable(["A", "B"])
    write_csv(t, tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_bytes() == b"file_id,window_start,window_end,A,B\r\n"
    back = read_csv(tmp_path / "e.csv")
    assert back.columns == ["A", "B"] and len(back) == 0


def test_wrong_field_count_names_line():
    text = "file_id,window_start,window_end,A\r\na,0,0,1\r\nb,0,0\r\n"
    with pytest.raises(TableError, match="line 3"):
        parse_csv_text(text)


def test_bad_header_and_empty_file():
    with pytest.raises(TableError):
        parse_csv_text("")
    with pytest.raises(TableError):
        parse_csv_text("id,a\r\n")


def test_quoted_file_ids_roundtrip(tmp_path):
    t = FeatureTable(["A"], ['dir, "x"/a.mid', "bé.krn"], [0, 0], [0, 0],
                     np.array([[1.5], [np.nan]]))
    write_csv(t, tmp_path / "q.csv")
    assert read_csv(tmp_path / "q.csv").equals(t)


names = st.from_regex(r"[A-Za-z][A-Za-z0-9_]{0,8}", fullmatch=True).filter(
    lambda s: s not in ("file_id", "window_start", "window_end"))
floats = st.floats(allow_nan=True, allow_infinity=False, width=64)


@st.composite
def tables(draw):
    cols = draw(st.lists(names, unique=True, max_size=6))
    n = draw(st.integers(0, 8))
    vals = draw(hnp.arrays(np.float64, (n, len(cols)), elements=floats))
    if cols and draw(st.booleans()):
        vals[:, draw(st.integers(0, len(cols) - 1))] = np.nan
    text = st.text(st.characters(blacklist_characters="\r\x00"), min_size=1, max_size=6)
    ids = draw(st.lists(text, min_size=n, max_size=n))
    ws = draw(st.lists(st.integers(0, 99), min_size=n, max_size=n))
    return FeatureTable(cols, ids, ws, [w + 3 for w in ws], vals)


@settings(max_examples=50)
@given(tables())
def test_csv_roundtrip(t):
    back = parse_csv_text(to_csv_text(t))
    assert back.equals(t.sorted_columns())


def test_negative_zero_and_extremes_roundtrip():
    vals = np.array([[-0.0, 5e-324, 1.7976931348623157e308, -1e-300]])
    t = FeatureTable(["a", "b", "c", "d"], ["f"], [0], [0], vals)
    back = parse_csv_text(to_csv_text(t))
    assert back.equals(t)
    assert math.copysign(1, back.values[0, 0]) == -1


def test_table_rejects_key_names_and_duplicates():
    with pytest.raises(TableError):
        FeatureTable(["file_id"])
    with pytest.raises(TableError):
        FeatureTable(["a", "a"])

"""Feature catalogue: one function per feature group, each returning a flat name -> float map.

Every group has a fixed set of names (see :data:`GROUP_FEATURES`) so that
tables stay joinable across a corpus. Non-computable values are NaN.

Conventions shared by all groups:

* grace notes count for pitch statistics only; rhythm, interval, vertical,
  texture and key features ignore them;
* standard deviations are population deviations;
* histograms are normalised to sum to one.
"""

from __future__ import annotations

import math
import re
import string
from typing import Callable, Optional, Sequence

import numpy as np

from .score import DYNAMIC_MARKS, HarmonicAnnotation, Score

NAN = float("nan")

# Key profiles from Krumhansl & Kessler (1982), as used by the Krumhansl-Schmuckler
# key-finding algorithm (Krumhansl, "Cognitive Foundations of Musical Pitch", 1990).
KK_MAJOR = (6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88)
KK_MINOR = (6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17)

DISSONANT_CLASSES = (1, 2, 6, 10, 11)
DYNAMIC_LEVELS = {mark: i + 1 for i, mark in enumerate(DYNAMIC_MARKS)}
DURATION_BUCKETS = (0.25, 0.5, 1.0, 2.0, 4.0)
INTERVAL_CLAMP = 12

# Checked in order; the first substring hit wins.
INSTRUMENT_TABLE = (
    ("contrabass", "contrabass"), ("contrabasso", "contrabass"),
    ("double bass", "contrabass"), ("kontrabass", "contrabass"),
    ("violoncello", "cello"), ("cello", "cello"),
    ("violino", "violin"), ("violin", "violin"), ("viola", "viola"),
    ("bassoon", "bassoon"), ("fagotto", "bassoon"), ("fagott", "bassoon"),
    ("voice", "voice"), ("soprano", "voice"), ("alto", "voice"), ("tenor", "voice"),
    ("bass", "voice"),
    ("flute", "flute"), ("flauto", "flute"), ("oboe", "oboe"), ("clarinet", "clarinet"),
    ("horn", "horn"), ("corno", "horn"), ("trumpet", "trumpet"), ("tromba", "trumpet"),
    ("piano", "keyboard"), ("cembalo", "keyboard"), ("harpsichord", "keyboard"),
    ("organ", "keyboard"),
)
INSTRUMENT_NAMES = ("bassoon", "cello", "clarinet", "contrabass", "flute", "horn",
                    "keyboard", "oboe", "other", "trumpet", "viola", "violin", "voice")


def _interval_name(m: int) -> str:
    return f"Interval_Hist_{m}" if m >= 0 else f"Interval_Hist_neg{-m}"


def _bucket_name(b: float) -> str:
    return "Duration_Hist_" + (f"{b:g}".replace(".", "_"))


GROUP_FEATURES: dict[str, tuple[str, ...]] = {
    "pitch": ("Pitch_Count", "Pitch_Mean", "Pitch_Std", "Pitch_Min", "Pitch_Max",
              "Pitch_Range", "Pitch_DistinctCount", "PC_Entropy")
    + tuple(f"PC_Hist_{i}" for i in range(12)),
    "interval": ("Interval_MeanAbs", "Interval_Std", "Interval_StepRatio",
                 "Interval_LeapRatio", "Interval_RepeatRatio", "Interval_AscendRatio",
                 "Interval_Largest")
    + tuple(_interval_name(m) for m in range(-INTERVAL_CLAMP, INTERVAL_CLAMP + 1)),
    "vertical": tuple(f"VInt_Hist_{i}" for i in range(12))
    + ("VInt_DissonanceRatio", "VInt_Count"),
    "rhythm": ("NoteDensity", "Duration_Mean", "Duration_Std", "OffbeatRatio", "IOI_Mean")
    + tuple(_bucket_name(b) for b in DURATION_BUCKETS),
    "dynamics_tempo": ("Dyn_Count", "Dyn_MeanLevel", "Dyn_ChangesPerMeasure",
                       "Tempo_NumericMean", "Tempo_EventCount", "Velocity_Mean",
                       "Velocity_Std", "MidiTempo_MeanBpm"),
    "texture": ("Parts_Count", "Measures_Count", "Span_Quarters", "SimultaneityMean",
                "UpperPartNoteShare"),
    "instrumentation": tuple(f"Instr_Family_{i}" for i in range(16))
    + ("Instr_Percussion", "Instr_DistinctCount")
    + tuple(f"Instr_{n}" for n in INSTRUMENT_NAMES),
    "key": ("KeySig_Fifths", "KS_TonicPC", "KS_Mode", "KS_Confidence"),
    "lyrics": ("Lyrics_Present", "Lyrics_SyllableCount", "Lyrics_DistinctWordCount"),
    "harmony": ("Harm_Count", "Harm_PerMeasure", "Harm_TonicRatio", "Harm_DominantRatio",
                "Harm_DistinctLabels", "Harm_LocalKeyChanges"),
}
GROUPS = tuple(GROUP_FEATURES)


def _finish(group: str, values: dict) -> dict[str, float]:
    out = {name: NAN for name in GROUP_FEATURES[group]}
    for k, v in values.items():
        if k not in out:
            raise KeyError(f"{k} is not a {group} feature")
        v = float(v)
        out[k] = v if math.isfinite(v) else NAN
    return dict(sorted(out.items()))


def _hist(counts: np.ndarray) -> np.ndarray:
    total = counts.sum()
    return counts / total


def pitch_features(score: Score) -> dict[str, float]:
    a = score.arrays
    n = len(a)
    if n == 0:
        return _finish("pitch", {"Pitch_Count": 0})
    p = a.pitch.astype(float)
    hist = _hist(np.bincount(a.pitch % 12, minlength=12).astype(float))
    nz = hist[hist > 0]
    values = {
        "Pitch_Count": n,
        "Pitch_Mean": p.mean(),
        "Pitch_Std": p.std(),
        "Pitch_Min": p.min(),
        "Pitch_Max": p.max(),
        "Pitch_Range": p.max() - p.min(),
        "Pitch_DistinctCount": len(np.unique(a.pitch)),
        "PC_Entropy": float(-(nz * np.log2(nz)).sum()) + 0.0,
    }
    values.update({f"PC_Hist_{i}": hist[i] for i in range(12)})
    return _finish("pitch", values)


def _sounding(score: Score):
    a = score.arrays
    keep = ~a.grace
    return a.onset[keep], a.duration[keep], a.pitch[keep], a.part[keep]


def melodic_intervals(score: Score) -> np.ndarray:
    """Signed intervals between consecutive top notes of each part, pooled."""
    onset, _, pitch, part = _sounding(score)
    pooled = []
    for idx in np.unique(part):
        sel = part == idx
        o, p = onset[sel], pitch[sel]
        order = np.lexsort((-p, o))
        o, p = o[order], p[order]
        first = np.ones(len(o), dtype=bool)
        first[1:] = o[1:] != o[:-1]
        top = p[first]
        if len(top) >= 2:
            pooled.append(np.diff(top))
    return np.concatenate(pooled) if pooled else np.zeros(0, dtype=np.int64)


def melodic_interval_features(score: Score) -> dict[str, float]:
    iv = melodic_intervals(score)
    if len(iv) == 0:
        return _finish("interval", {})
    absiv = np.abs(iv)
    moving = iv[iv != 0]
    clamped = np.clip(iv, -INTERVAL_CLAMP, INTERVAL_CLAMP) + INTERVAL_CLAMP
    hist = _hist(np.bincount(clamped, minlength=2 * INTERVAL_CLAMP + 1).astype(float))
    values = {
        "Interval_MeanAbs": absiv.mean(),
        "Interval_Std": iv.astype(float).std(),
        "Interval_StepRatio": np.isin(absiv, (1, 2)).mean(),
        "Interval_LeapRatio": (absiv >= 5).mean(),
        "Interval_RepeatRatio": (iv == 0).mean(),
        "Interval_AscendRatio": (moving > 0).mean() if len(moving) else NAN,
        "Interval_Largest": absiv.max(),
    }
    for m in range(-INTERVAL_CLAMP, INTERVAL_CLAMP + 1):
        values[_interval_name(m)] = hist[m + INTERVAL_CLAMP]
    return _finish("interval", values)


def vertical_pairs(score: Score, cells: int = 1 << 20):
    """Yield (interval class array, overlap weight array) for each pair of parts."""
    onset, dur, pitch, part = _sounding(score)
    end = onset + dur
    ids = np.unique(part)
    for i, a_id in enumerate(ids):
        sa = part == a_id
        oa, ea, pa = onset[sa], end[sa], pitch[sa]
        for b_id in ids[i + 1:]:
            sb = part == b_id
            ob, eb, pb = onset[sb], end[sb], pitch[sb]
            block = max(1, cells // max(len(ob), 1))
            for s in range(0, len(oa), block):
                ov = (np.minimum(ea[s:s + block, None], eb[None, :])
                      - np.maximum(oa[s:s + block, None], ob[None, :]))
                r, c = np.nonzero(ov > 0)
                if len(r):
                    yield np.abs(pa[s:s + block][r] - pb[c]) % 12, ov[r, c]


def vertical_interval_features(score: Score) -> dict[str, float]:
    if len(score.parts) < 2:
        return _finish("vertical", {})
    weights = np.zeros(12)
    count = 0
    for cls, w in vertical_pairs(score):
        weights += np.bincount(cls, weights=w, minlength=12)
        count += len(cls)
    if count == 0:
        return _finish("vertical", {})
    hist = _hist(weights)
    values = {f"VInt_Hist_{i}": hist[i] for i in range(12)}
    values["VInt_DissonanceRatio"] = hist[list(DISSONANT_CLASSES)].sum()
    values["VInt_Count"] = count
    return _finish("vertical", values)


def duration_bucket(duration: np.ndarray) -> np.ndarray:
    """Index into DURATION_BUCKETS: nearest in log2 space, ties to the larger bucket."""
    idx = np.floor(np.log2(duration) + 0.5).astype(np.int64) + 2
    return np.clip(idx, 0, len(DURATION_BUCKETS) - 1)


def rhythm_features(score: Score) -> dict[str, float]:
    a = score.arrays
    keep = ~a.grace
    if not keep.any():
        return _finish("rhythm", {})
    onset, dur, part, measure = a.onset[keep], a.duration[keep], a.part[keep], a.measure[keep]
    span = float(max(onset + dur))
    starts = score.measure_starts
    offset = onset - np.array([float(starts[m]) for m in measure])
    offbeat = np.abs(offset - np.round(offset)) > 1e-9
    iois = []
    for idx in np.unique(part):
        o = np.unique(onset[part == idx])
        if len(o) > 1:
            iois.append(np.diff(o))
    iois = np.concatenate(iois) if iois else np.zeros(0)
    hist = _hist(np.bincount(duration_bucket(dur), minlength=len(DURATION_BUCKETS)).astype(float))
    values = {
        "NoteDensity": len(dur) / span if span > 0 else NAN,
        "Duration_Mean": dur.mean(),
        "Duration_Std": dur.std(),
        "OffbeatRatio": offbeat.mean(),
        "IOI_Mean": iois.mean() if len(iois) else NAN,
    }
    for i, b in enumerate(DURATION_BUCKETS):
        values[_bucket_name(b)] = hist[i]
    return _finish("rhythm", values)


def dynamics_tempo_features(score: Score) -> dict[str, float]:
    """Notation-based dynamics/tempo and, under separate names, MIDI velocity/tempo."""
    marks = sorted(score.dynamic_events)
    levels = [DYNAMIC_LEVELS[e.mark] for e in marks]
    changes = 0
    last: dict[int, int] = {}
    for e, lvl in zip(marks, levels):
        if e.part_index in last and last[e.part_index] != lvl:
            changes += 1
        last[e.part_index] = lvl
    n_measures = len(score.measure_map)
    notated = [e.bpm for e in score.tempo_events if e.source != "midi_meta"]
    midi_tempi = [e.bpm for e in score.tempo_events if e.source == "midi_meta"]
    vel = score.arrays.velocity
    vel = vel[~np.isnan(vel)]
    values = {
        "Dyn_Count": len(marks),
        "Dyn_MeanLevel": np.mean(levels) if levels else NAN,
        "Dyn_ChangesPerMeasure": changes / n_measures if n_measures else NAN,
        "Tempo_NumericMean": np.mean(notated) if notated else NAN,
        "Tempo_EventCount": len(notated),
        "Velocity_Mean": vel.mean() if len(vel) else NAN,
        "Velocity_Std": vel.std() if len(vel) else NAN,
        "MidiTempo_MeanBpm": np.mean(midi_tempi) if midi_tempi else NAN,
    }
    return _finish("dynamics_tempo", values)


def texture_density_features(score: Score) -> dict[str, float]:
    onset, dur, pitch, part = _sounding(score)
    values = {
        "Parts_Count": len(score.parts),
        "Measures_Count": len(score.measure_map),
        "Span_Quarters": float(max(onset + dur)) if len(dur) else 0.0,
    }
    if len(dur):
        span = values["Span_Quarters"]
        # the time integral of the sounding count is the summed duration
        values["SimultaneityMean"] = dur.sum() / span
        ids = np.unique(part)
        means = [pitch[part == i].mean() for i in ids]
        upper = ids[int(np.argmax(means))]
        values["UpperPartNoteShare"] = (part == upper).sum() / len(part)
    return _finish("texture", values)


def instrument_for_name(name: str) -> str:
    low = name.lower()
    for needle, instrument in INSTRUMENT_TABLE:
        if needle in low:
            return instrument
    return "other"


def instrumentation_features(score: Score) -> dict[str, float]:
    values: dict[str, float] = {}
    if score.source_format == "midi":
        families = {(p.midi_program or 0) // 8 for p in score.parts if not p.percussion}
        percussion = any(p.percussion for p in score.parts)
        values.update({f"Instr_Family_{i}": float(i in families) for i in range(16)})
        values["Instr_Percussion"] = float(percussion)
        values["Instr_DistinctCount"] = len(families) + int(percussion)
    else:
        names = {instrument_for_name(p.name) for p in score.parts}
        values.update({f"Instr_{n}": float(n in names) for n in INSTRUMENT_NAMES})
        values["Instr_DistinctCount"] = len(names)
    return _finish("instrumentation", values)


def pitch_class_weights(score: Score) -> np.ndarray:
    """Duration-weighted pitch-class vector over non-grace notes."""
    _, dur, pitch, _ = _sounding(score)
    return np.bincount(pitch % 12, weights=dur, minlength=12)


def key_correlations(pc_vector: Sequence[float]) -> np.ndarray:
    """Pearson correlations against the 24 key profiles, ordered (tonic, major/minor)."""
    x = np.asarray(pc_vector, dtype=float)
    xc = x - x.mean()
    xn = np.sqrt((xc ** 2).sum())
    out = np.empty(24)
    for tonic in range(12):
        for mode, profile in enumerate((KK_MAJOR, KK_MINOR)):
            y = np.roll(np.asarray(profile), tonic)
            yc = y - y.mean()
            denom = xn * np.sqrt((yc ** 2).sum())
            out[2 * tonic + mode] = (xc * yc).sum() / denom if denom > 0 else NAN
    return out


def find_key(pc_vector: Sequence[float]) -> Optional[tuple[int, int, float]]:
    """(tonic pc, mode 0=major/1=minor, confidence) or None when undefined."""
    r = key_correlations(pc_vector)
    if np.isnan(r).any():
        return None
    best = int(np.argmax(r))  # first maximum = lowest tonic, major first
    ordered = np.sort(r)
    return best // 2, best % 2, float(ordered[-1] - ordered[-2])


def key_features(score: Score) -> dict[str, float]:
    values: dict[str, float] = {}
    if score.key_signatures:
        values["KeySig_Fifths"] = score.key_signatures[0].fifths
    found = find_key(pitch_class_weights(score))
    if found is not None:
        values["KS_TonicPC"], values["KS_Mode"], values["KS_Confidence"] = found
    return _finish("key", values)


_PUNCT = str.maketrans("", "", string.punctuation + "¡¿«»")


def lyric_words(score: Score) -> list[str]:
    """Words assembled from syllables; a leading/trailing hyphen marks continuation."""
    words = []
    for part in score.parts:
        current = None
        for ly in part.lyrics:
            text = ly.text.strip()
            cont_prev = text.startswith("-")
            cont_next = text.endswith("-") and len(text) > 1
            core = text.strip("-")
            if cont_prev and current is not None:
                current += core
            else:
                if current is not None:
                    words.append(current)
                current = core
            if not cont_next:
                words.append(current)
                current = None
        if current is not None:
            words.append(current)
    cleaned = (w.translate(_PUNCT).casefold() for w in words)
    return [w for w in cleaned if w]


def lyrics_features(score: Score) -> dict[str, float]:
    syllables = sum(len(p.lyrics) for p in score.parts)
    if syllables == 0:
        return _finish("lyrics", {"Lyrics_Present": 0})
    return _finish("lyrics", {
        "Lyrics_Present": 1,
        "Lyrics_SyllableCount": syllables,
        "Lyrics_DistinctWordCount": len(set(lyric_words(score))),
    })


_NUMERAL = re.compile(r"^[b#]?(VII|VI|IV|V|III|II|I|vii|vi|iv|v|iii|ii|i)(o|°|ø)?(?![A-Za-z])")


def leading_numeral(label: str) -> tuple[str, str]:
    m = _NUMERAL.match(label.strip())
    return (m.group(1), m.group(2) or "") if m else ("", "")


def harmony_features(score: Score,
                     annotations: Optional[Sequence[HarmonicAnnotation]]) -> dict[str, float]:
    if not annotations:
        return _finish("harmony", {})
    numerals = [leading_numeral(a.label) for a in annotations]
    n = len(annotations)
    tonic = sum(1 for num, _ in numerals if num in ("I", "i"))
    dominant = sum(1 for num, q in numerals
                   if num in ("V", "v") or (num in ("VII", "vii") and q in ("o", "°")))
    keys = [a.local_key for a in annotations]
    n_measures = len(score.measure_map)
    return _finish("harmony", {
        "Harm_Count": n,
        "Harm_PerMeasure": n / n_measures if n_measures else NAN,
        "Harm_TonicRatio": tonic / n,
        "Harm_DominantRatio": dominant / n,
        "Harm_DistinctLabels": len({a.label for a in annotations}),
        "Harm_LocalKeyChanges": sum(1 for x, y in zip(keys, keys[1:]) if x != y),
    })


GROUP_FUNCTIONS: dict[str, Callable[[Score], dict[str, float]]] = {
    "pitch": pitch_features,
    "interval": melodic_interval_features,
    "vertical": vertical_interval_features,
    "rhythm": rhythm_features,
    "dynamics_tempo": dynamics_tempo_features,
    "texture": texture_density_features,
    "instrumentation": instrumentation_features,
    "key": key_features,
    "lyrics": lyrics_features,
}

"""Assemble feature groups into rows, for whole scores or measure windows."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .catalogue import GROUP_FEATURES, GROUP_FUNCTIONS, GROUPS, harmony_features
from .score import HarmonicAnnotation, Lyric, Measure, Score


class ConfigError(ValueError):
    """Invalid extraction configuration (``invalid_config``)."""


@dataclass(frozen=True)
class ExtractionConfig:
    enabled_groups: frozenset = frozenset(GROUPS)
    window_measures: Optional[int] = None
    window_overlap: int = 0
    annotation_lookup: dict = field(default_factory=dict, hash=False, compare=False)
    # trailing window shorter than w is kept when it spans >= ceil(w/2) measures
    partial_windows: bool = True

    def __post_init__(self):
        groups = frozenset(self.enabled_groups)
        object.__setattr__(self, "enabled_groups", groups)
        unknown = groups - set(GROUPS)
        if unknown:
            raise ConfigError(f"unknown feature groups: {sorted(unknown)}")
        if self.window_overlap < 0:
            raise ConfigError("window_overlap must be >= 0")
        if self.window_measures is not None:
            if self.window_measures < 1:
                raise ConfigError("window_measures must be >= 1")
            if self.window_overlap >= self.window_measures:
                raise ConfigError("window_overlap must be smaller than window_measures")


@dataclass(frozen=True)
class FeatureRow:
    file_id: str
    window_start: int
    window_end: int
    values: dict


def list_features(config: ExtractionConfig) -> list[str]:
    """Every feature name the enabled groups emit, sorted."""
    return sorted(n for g in config.enabled_groups for n in GROUP_FEATURES[g])


def compute_features(score: Score, annotations: Optional[Sequence[HarmonicAnnotation]],
                     groups) -> dict[str, float]:
    values: dict[str, float] = {}
    for g in sorted(groups):
        if g == "harmony":
            values.update(harmony_features(score, annotations))
        else:
            try:
                values.update(GROUP_FUNCTIONS[g](score))
            except (ValueError, ArithmeticError, IndexError, KeyError):
                # feature-level failure degrades to NaN
                values.update({n: math.nan for n in GROUP_FEATURES[g]})
    return dict(sorted(values.items()))


def extract(score: Score, annotations: Optional[Sequence[HarmonicAnnotation]] = None,
            config: ExtractionConfig = ExtractionConfig(), file_id: Optional[str] = None
            ) -> FeatureRow:
    """Whole-score row (window 0..0) with exactly the names of :func:`list_features`."""
    return FeatureRow(file_id if file_id is not None else score.source_path, 0, 0,
                      compute_features(score, annotations, config.enabled_groups))


def restrict(score: Score, first: int, last: int) -> Score:
    """Sub-score of measures ``first..last``, rebased to start at measure 1, onset 0.

    Notes belong to the window of their onset measure and keep their full
    duration. Tempo, dynamic and key events are kept when their onset falls
    inside the window's time span.
    """
    mm = [m for m in score.measure_map if first <= m.index <= last]
    if not mm:
        return replace(score, parts=tuple(replace(p, notes=(), lyrics=()) for p in score.parts),
                       measure_map=(), key_signatures=(), tempo_events=(), dynamic_events=(),
                       harmonies=())
    t0 = mm[0].start
    after = [m.start for m in score.measure_map if m.index == last + 1]
    t1 = after[0] if after else None
    shift = first - 1

    def inside(t):
        return t >= t0 and (t1 is None or t < t1)

    parts = []
    for p in score.parts:
        notes = tuple(n._replace(onset=n.onset - t0, measure_index=n.measure_index - shift)
                      for n in p.notes if first <= n.measure_index <= last)
        onsets = {n.onset for n in notes}
        lyrics = tuple(Lyric(ly.onset - t0, ly.text) for ly in p.lyrics
                       if ly.onset - t0 in onsets)
        parts.append(replace(p, notes=notes, lyrics=lyrics))
    return replace(
        score,
        parts=tuple(parts),
        measure_map=tuple(Measure(m.index - shift, m.start - t0, m.numerator, m.denominator)
                          for m in mm),
        key_signatures=tuple(k._replace(onset=k.onset - t0)
                             for k in score.key_signatures if inside(k.onset)),
        tempo_events=tuple(e._replace(onset=e.onset - t0)
                           for e in score.tempo_events if inside(e.onset)),
        dynamic_events=tuple(e._replace(onset=e.onset - t0)
                             for e in score.dynamic_events if inside(e.onset)),
        harmonies=tuple(restrict_annotations(score.harmonies, first, last)),
    )


def restrict_annotations(annotations, first: int, last: int) -> list[HarmonicAnnotation]:
    return [a._replace(measure_index=a.measure_index - first + 1)
            for a in annotations or () if first <= a.measure_index <= last]


def window_bounds(n_measures: int, w: int, overlap: int,
                  partial: bool = True) -> list[tuple[int, int]]:
    """Measure ranges ``[a, b]`` (1-based, inclusive) covered by the windows."""
    if overlap >= w:
        raise ConfigError("window_overlap must be smaller than window_measures")
    stride = w - overlap
    out = []
    a = 1
    while a <= n_measures:
        b = a + w - 1
        if b <= n_measures:
            out.append((a, b))
        else:
            if partial and n_measures - a + 1 >= math.ceil(w / 2):
                out.append((a, n_measures))
            break
        if b >= n_measures:
            break
        a += stride
    return out


def extract_windowed(score: Score, annotations: Optional[Sequence[HarmonicAnnotation]] = None,
                     config: ExtractionConfig = ExtractionConfig(),
                     file_id: Optional[str] = None) -> list[FeatureRow]:
    """One row per measure window; each equals :func:`extract` on the restricted sub-score."""
    w = config.window_measures
    if w is None:
        raise ConfigError("windowing is not enabled in this configuration")
    fid = file_id if file_id is not None else score.source_path
    rows = []
    for a, b in window_bounds(len(score.measure_map), w, config.window_overlap,
                              config.partial_windows):
        sub = restrict(score, a, b)
        ann = restrict_annotations(annotations, a, b) if annotations is not None else None
        rows.append(FeatureRow(fid, a, b, compute_features(sub, ann, config.enabled_groups)))
    return rows


def extract_rows(score: Score, annotations, config: ExtractionConfig,
                 file_id: Optional[str] = None) -> list[FeatureRow]:
    if config.window_measures is None:
        return [extract(score, annotations, config, file_id)]
    return extract_windowed(score, annotations, config, file_id)


__all__ = [
    "ConfigError", "ExtractionConfig", "FeatureRow", "compute_features", "extract",
    "extract_rows", "extract_windowed", "list_features", "restrict", "window_bounds",
]

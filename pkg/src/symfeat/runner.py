"""Corpus runner: discover files, parse through the cache, extract in parallel, aggregate."""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import cache
from .engine import ExtractionConfig, extract_rows, list_features
from .parsers import (
    EXTENSIONS, PARSER_VERSION, ParseError, format_for_path, parse_annotations, parse_bytes,
)
from .table import FeatureTable

log = logging.getLogger(__name__)

FORMAT_FILTERS = ("auto", "midi", "musicxml", "kern")


@dataclass
class RunReport:
    files_total: int = 0
    files_ok: int = 0
    files_errored: int = 0
    errors: list = field(default_factory=list)  # (path, ParseError)
    wall_seconds: float = 0.0
    cache_hits: int = 0
    parser_invocations: int = 0

    def to_dict(self) -> dict:
        return {
            "files_total": self.files_total,
            "files_ok": self.files_ok,
            "files_errored": self.files_errored,
            "errors": [{**e.to_dict(), "path": p} for p, e in self.errors],
            "wall_seconds": self.wall_seconds,
            "cache_hits": self.cache_hits,
            "parser_invocations": self.parser_invocations,
        }


def discover(root, format_filter: str = "auto") -> list[Path]:
    """Recursively list score files under ``root``, sorted by relative path."""
    if format_filter not in FORMAT_FILTERS:
        raise ValueError(f"format filter must be one of {FORMAT_FILTERS}")
    root = Path(root)
    if not root.is_dir():
        raise NotADirectoryError(f"corpus root {root} is not a directory")
    found = []
    for dirpath, dirnames, filenames in os.walk(root, onerror=_raise):
        dirnames.sort()
        for name in filenames:
            fmt = EXTENSIONS.get(os.path.splitext(name)[1].lower())
            if fmt and (format_filter == "auto" or fmt == format_filter):
                found.append(Path(dirpath) / name)
    return sorted(found, key=lambda p: p.relative_to(root).as_posix())


def _raise(exc: OSError):
    raise exc


@dataclass(frozen=True)
class _Task:
    index: int
    path: str
    file_id: str
    annotation_path: Optional[str]
    config: ExtractionConfig
    cache_dir: Optional[str]


@dataclass
class _Result:
    index: int
    rows: list = field(default_factory=list)
    error: Optional[ParseError] = None
    cache_hit: bool = False
    parsed: int = 0


def load_score(path: str, cache_dir=None):
    """Parse ``path`` (consulting the cache). Returns ``(score, cache_hit, parsed)``."""
    fmt = format_for_path(path)
    if fmt is None:
        raise ParseError(path, "unsupported_construct", "unrecognised file extension")
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(path, "io", str(exc)) from exc
    key = None
    if cache_dir is not None:
        key = cache.cache_key(data, PARSER_VERSION, fmt)
        score = cache.get(cache_dir, key)
        if score is not None:
            return score, True, 0
    score = parse_bytes(data, fmt, path)
    if key is not None:
        try:
            cache.put(cache_dir, key, score)
        except cache.CacheError as exc:
            log.warning("cache write failed, continuing uncached: %s", exc)
    return score, False, 1


def _annotations_for(task: _Task, score):
    if task.annotation_path and os.path.exists(task.annotation_path):
        try:
            text = Path(task.annotation_path).read_bytes()
        except OSError as exc:
            raise ParseError(task.annotation_path, "io", str(exc)) from exc
        return parse_annotations(text, task.annotation_path)
    return list(score.harmonies) or None


def _process(task: _Task) -> _Result:
    res = _Result(task.index)
    try:
        score, res.cache_hit, res.parsed = load_score(task.path, task.cache_dir)
        annotations = _annotations_for(task, score)
        res.rows = extract_rows(score, annotations, task.config, task.file_id)
    except ParseError as exc:
        res.error = exc
    except Exception as exc:  # noqa: BLE001 - per-file isolation
        res.error = ParseError(task.path, "malformed_event",
                               f"extraction failed: {type(exc).__name__}: {exc}")
    return res


def _file_id(path: Path, root) -> str:
    if root is not None:
        try:
            return Path(path).resolve().relative_to(Path(root).resolve()).as_posix()
        except ValueError:
            pass
    return Path(path).as_posix()


def annotation_path_for(path: Path, file_id: str, config: ExtractionConfig,
                        annotations_dir=None) -> Optional[str]:
    """Sidecar resolution: explicit lookup, then ``--annotations`` dir, then ``<stem>.tsv`` beside."""
    lookup = config.annotation_lookup
    for k in (file_id, str(path)):
        if k in lookup:
            return str(lookup[k])
    if annotations_dir is not None:
        candidate = Path(annotations_dir) / Path(file_id).with_suffix(".tsv")
        if candidate.exists():
            return str(candidate)
    return str(Path(path).with_suffix(".tsv"))


def run_corpus(paths: Sequence, config: ExtractionConfig = ExtractionConfig(),
               cache_dir=None, jobs: int = 1, root=None, annotations_dir=None
               ) -> tuple[FeatureTable, RunReport]:
    """Extract every file into one table; rows follow ``paths`` order whatever ``jobs`` is."""
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    t0 = time.perf_counter()
    tasks = []
    for i, p in enumerate(paths):
        fid = _file_id(Path(p), root)
        tasks.append(_Task(i, str(p), fid, annotation_path_for(Path(p), fid, config, annotations_dir),
                           config, None if cache_dir is None else str(cache_dir)))

    if jobs == 1 or len(tasks) <= 1:
        results = map(_process, tasks)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=jobs)
        results = pool.map(_process, tasks, chunksize=max(1, len(tasks) // (jobs * 8)))

    report = RunReport(files_total=len(tasks))
    rows = []
    try:
        for task, res in zip(tasks, results):
            report.parser_invocations += res.parsed
            if res.error is not None:
                report.files_errored += 1
                report.errors.append((task.file_id, res.error))
                log.info("ERR  %s: %s", task.file_id, res.error)
                continue
            report.files_ok += 1
            report.cache_hits += res.cache_hit
            rows.extend(res.rows)
            log.info("ok   %s%s", task.file_id, " (cached)" if res.cache_hit else "")
    finally:
        if pool is not None:
            pool.shutdown()
    table = FeatureTable.from_rows(rows, list_features(config))
    report.wall_seconds = time.perf_counter() - t0
    return table, report

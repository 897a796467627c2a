"""Command-line entry point: extract, cache clear, postprocess, evaluate."""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

from . import cache
from .catalogue import GROUPS
from .engine import ConfigError, ExtractionConfig
from .evaluate import EvalError, combine_tables, cross_validate, intersect_and_prune, read_labels
from .postprocess import REDUCERS, drop_columns, merge_columns, nan_filter, replace_values
from .runner import FORMAT_FILTERS, discover, run_corpus
from .table import TableError, read_csv, write_csv

log = logging.getLogger("symfeat")


class Fatal(Exception):
    pass


def _setup_logging(verbose: bool):
    color = sys.stderr.isatty() and "NO_COLOR" not in os.environ
    fmt = "\x1b[2m%(levelname)s\x1b[0m %(message)s" if color else "%(levelname)s %(message)s"
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format=fmt,
                        stream=sys.stderr, force=True)


def _write_json(path, obj):
    def clean(o):
        if isinstance(o, float) and not math.isfinite(o):
            return None
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        return o
    Path(path).write_text(json.dumps(clean(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_extract(args) -> int:
    groups = GROUPS if args.features is None else [g.strip() for g in args.features.split(",")
                                                   if g.strip()]
    config = ExtractionConfig(enabled_groups=frozenset(groups),
                              window_measures=args.window_measures,
                              window_overlap=args.window_overlap)
    paths = discover(args.input, args.format)
    log.info("%d files under %s", len(paths), args.input)
    table, report = run_corpus(paths, config, cache_dir=args.cache_dir, jobs=args.jobs,
                               root=args.input, annotations_dir=args.annotations)
    write_csv(table, args.output)
    if args.report:
        _write_json(args.report, report.to_dict())
    print(f"{report.files_ok}/{report.files_total} files ok, {report.files_errored} errored, "
          f"{len(table)} rows, {report.cache_hits} cache hits, {report.wall_seconds:.2f} s")
    return 0


def cmd_cache_clear(args) -> int:
    n = cache.clear(args.cache_dir)
    print(f"removed {n} cache entries")
    return 0


def _parse_merge(spec: str):
    try:
        srcs, rest = spec.split("=", 1)
        dest, reducer = rest.rsplit(":", 1)
    except ValueError:
        raise Fatal(f"bad --merge {spec!r}; expected SRC1,SRC2=DEST:REDUCER") from None
    if reducer not in REDUCERS:
        raise Fatal(f"bad reducer {reducer!r}; choose from {', '.join(REDUCERS)}")
    return [s.strip() for s in srcs.split(",")], dest, reducer


def cmd_postprocess(args) -> int:
    table = read_csv(args.table)
    for spec in args.replace:
        pattern, _, value = spec.rpartition("=")
        if not pattern:
            raise Fatal(f"bad --replace {spec!r}; expected PATTERN=VALUE")
        table = replace_values(table, pattern, float(value))
    for pattern in args.drop:
        table = drop_columns(table, pattern)
    for spec in args.merge:
        table = merge_columns(table, *_parse_merge(spec))
    report = None
    if args.nan_filter:
        table, report = nan_filter(table, drop_columns=not args.keep_nan_columns)
        print(f"nan filter: r={report.r:.4g}, removed {len(report.rows_removed)} rows and "
              f"{len(report.columns_removed)} columns")
    write_csv(table, args.output)
    if args.report:
        _write_json(args.report, report.to_dict() if report else {})
    return 0


def cmd_evaluate(args) -> int:
    tables = [read_csv(p) for p in args.table]
    labels = read_labels(args.labels)
    if args.combine:
        if len(tables) < 2:
            raise Fatal("--combine needs at least two --table arguments")
        tags = [Path(p).stem for p in args.table]
        tables, names = [combine_tables(tables, tags)], ["+".join(tags)]
    else:
        names = list(args.table)
    matrices = intersect_and_prune(tables, labels, args.folds)
    results = {}
    for name, M in zip(names, matrices):
        res = cross_validate(M, args.folds, args.seed, args.pca, args.paper_mode)
        results[name] = res.to_dict()
        scores = ", ".join(f"{m}={v:.3f}" for m, v in res.per_model.items())
        print(f"{name}: n={len(M.y)} d={M.X.shape[1]} {scores} best={res.best}")
    _write_json(args.report, next(iter(results.values())) if len(results) == 1 else results)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="symfeat", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log one line per file")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("extract", help="extract a feature table from a corpus directory")
    e.add_argument("--input", required=True)
    e.add_argument("--output", required=True)
    e.add_argument("--format", default="auto", choices=FORMAT_FILTERS)
    e.add_argument("--features", help=f"comma-separated groups from: {', '.join(GROUPS)}")
    e.add_argument("--window-measures", type=int)
    e.add_argument("--window-overlap", type=int, default=0)
    e.add_argument("--cache-dir")
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--annotations", help="directory of <stem>.tsv harmonic annotations")
    e.add_argument("--report")
    e.set_defaults(func=cmd_extract)

    c = sub.add_parser("cache", help="cache maintenance")
    csub = c.add_subparsers(dest="action", required=True)
    cc = csub.add_parser("clear", help="delete every cache entry")
    cc.add_argument("--cache-dir", required=True)
    cc.set_defaults(func=cmd_cache_clear)

    pp = sub.add_parser("postprocess", help="filter, substitute, drop or merge table columns")
    pp.add_argument("--table", required=True)
    pp.add_argument("--output", required=True)
    pp.add_argument("--nan-filter", action="store_true")
    pp.add_argument("--keep-nan-columns", action="store_true",
                    help="with --nan-filter, skip the column-drop step")
    pp.add_argument("--replace", action="append", default=[], metavar="PATTERN=VALUE")
    pp.add_argument("--drop", action="append", default=[], metavar="PATTERN")
    pp.add_argument("--merge", action="append", default=[], metavar="SRC1,SRC2=DEST:REDUCER")
    pp.add_argument("--report")
    pp.set_defaults(func=cmd_postprocess)

    ev = sub.add_parser("evaluate", help="cross-validated classification on feature tables")
    ev.add_argument("--table", action="append", required=True)
    ev.add_argument("--labels", required=True)
    ev.add_argument("--folds", type=int, default=10)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--pca", type=int)
    ev.add_argument("--paper-mode", action="store_true",
                    help="fit standardization and PCA once on the whole table")
    ev.add_argument("--combine", action="store_true")
    ev.add_argument("--report", required=True)
    ev.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)
    try:
        return args.func(args)
    except (Fatal, ConfigError, TableError, EvalError, cache.CacheError, OSError,
            ValueError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

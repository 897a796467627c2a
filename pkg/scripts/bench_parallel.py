"""Extraction wall time for several --jobs settings on one synthetic corpus."""

import argparse
import os
import tempfile
import time
from pathlib import Path

from symfeat.engine import ExtractionConfig
from symfeat.runner import discover, run_corpus
from symfeat.synth import write_random_corpus
from symfeat.table import to_csv_text


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--files", type=int, default=200)
    ap.add_argument("--jobs", type=int, nargs="+", default=[1, 2, 4])
    a = ap.parse_args()
    print(f"cpus: {os.cpu_count()}")
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        write_random_corpus(root, n_files=a.files)
        paths = discover(root)
        base, ref = None, None
        for jobs in a.jobs:
            t0 = time.perf_counter()
            table, _ = run_corpus(paths, ExtractionConfig(), jobs=jobs, root=root)
            wall = time.perf_counter() - t0
            text = to_csv_text(table)
            base = base or wall
            ref = ref or text
            print(f"jobs={jobs}: {wall:.2f} s ({wall / base:.2f}x of first), "
                  f"identical: {text == ref}")


if __name__ == "__main__":
    main()

"""Cold versus warm extraction time on a synthetic MIDI corpus."""

import argparse
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
    ap.add_argument("--corpus", help="reuse an existing corpus directory")
    a = ap.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(a.corpus) if a.corpus else Path(tmp) / "corpus"
        if not a.corpus:
            write_random_corpus(root, n_files=a.files)
        paths = discover(root)
        cache_dir = Path(tmp) / "cache"
        timings = []
        for label in ("cold", "warm"):
            t0 = time.perf_counter()
            table, rep = run_corpus(paths, ExtractionConfig(), cache_dir=cache_dir, root=root)
            timings.append(time.perf_counter() - t0)
            print(f"{label}: {timings[-1]:.2f} s, {rep.parser_invocations} parses, "
                  f"{rep.cache_hits} hits")
            if label == "cold":
                first = to_csv_text(table)
        print(f"warm/cold = {timings[1] / timings[0]:.3f}; "
              f"tables identical: {first == to_csv_text(table)}")


if __name__ == "__main__":
    main()

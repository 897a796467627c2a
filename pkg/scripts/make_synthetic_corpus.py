"""Write random multi-part MIDI files (or the conformance scores) to a directory."""

import argparse

from symfeat.synth import write_conformance, write_random_corpus

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out")
    ap.add_argument("--files", type=int, default=200)
    ap.add_argument("--parts", type=int, default=4)
    ap.add_argument("--measures", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--conformance", action="store_true",
                    help="write the 10 conformance scores in all three formats instead")
    a = ap.parse_args()
    if a.conformance:
        write_conformance(a.out)
    else:
        write_random_corpus(a.out, a.files, a.parts, a.measures, a.seed)

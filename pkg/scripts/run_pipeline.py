"""Full pipeline on a labelled corpus: extract, NaN filter, PCA, cross-validation.

Labels come from the first directory component of each file path, so a tree
like ``quartets/haydn/*.krn, quartets/mozart/*.krn`` works as is.
"""

import argparse
import json

from symfeat.engine import ExtractionConfig
from symfeat.evaluate import cross_validate, intersect_and_prune
from symfeat.postprocess import nan_filter
from symfeat.runner import discover, run_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("corpus")
    ap.add_argument("--format", default="auto")
    ap.add_argument("--pca", type=int, default=10)
    ap.add_argument("--folds", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--cache-dir")
    a = ap.parse_args()

    table, report = run_corpus(discover(a.corpus, a.format), ExtractionConfig(),
                               cache_dir=a.cache_dir, jobs=a.jobs, root=a.corpus)
    print(f"extracted {report.files_ok} files, {report.files_errored} errored")
    clean, nf = nan_filter(table)
    print(f"nan filter: r={nf.r:.3f}, -{len(nf.rows_removed)} rows, "
          f"-{len(nf.columns_removed)} columns -> {clean.shape}")
    labels = {fid: fid.split("/")[0] for fid in clean.file_ids if "/" in fid}
    (M,) = intersect_and_prune([clean], labels, a.folds)
    res = cross_validate(M, a.folds, a.seed, a.pca)
    print(json.dumps(res.per_model, indent=2))


if __name__ == "__main__":
    main()

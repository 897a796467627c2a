"""Evaluation protocol: standardize, optional PCA, stratified k-fold CV, balanced accuracy."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .table import FeatureTable, TableError

log = logging.getLogger(__name__)

STD_EPS = 1e-12
KNN_K = 5
LOGREG_L2 = 1e-2
LOGREG_ITERS = 500
LOGREG_STEP = 0.1
MODELS = ("knn", "logreg", "dummy")


class EvalError(ValueError):
    pass


@dataclass
class LabeledMatrix:
    X: np.ndarray
    y: np.ndarray
    feature_names: list
    ids: list

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=object)
        if self.X.ndim != 2 or self.X.shape != (len(self.y), len(self.feature_names)):
            raise EvalError("X, y and feature_names have inconsistent shapes")
        if len(self.ids) != len(self.y):
            raise EvalError("ids and y differ in length")
        if not np.isfinite(self.X).all():
            raise EvalError("feature matrix contains NaN or inf; run the NaN filter first")
        if len(self.y) < 2 or len(set(self.y)) < 2:
            raise EvalError("need at least 2 rows and 2 distinct labels")


@dataclass
class EvalResult:
    per_model: dict
    best: str
    folds: int
    seed: int
    fold_scores: dict = field(default_factory=dict)
    n_samples: int = 0
    n_features: int = 0
    pca_k: Optional[int] = None
    paper_mode: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def read_labels(path) -> dict:
    """``file_id,class`` CSV into a dict."""
    text = Path(path).read_bytes().decode("utf-8-sig")
    reader = csv.DictReader(io.StringIO(text, newline=""))
    if reader.fieldnames is None or not {"file_id", "class"} <= set(reader.fieldnames):
        raise EvalError(f"{path}: labels file needs columns file_id, class")
    return {row["file_id"]: row["class"] for row in reader}


def intersect_and_prune(tables: Sequence[FeatureTable], labels: dict,
                        folds: int) -> list[LabeledMatrix]:
    """Restrict every table to the ids present everywhere, dropping classes below 2*folds."""
    if folds < 2:
        raise EvalError("folds must be >= 2")
    if not tables:
        raise EvalError("no tables given")
    for t in tables:
        if len(set(t.file_ids)) != len(t.file_ids):
            raise EvalError("table has several rows per file_id; use whole-score tables")
    common = set(labels)
    for t in tables:
        common &= set(t.file_ids)
    ids = [i for i in tables[0].file_ids if i in common]
    counts: dict = {}
    for i in ids:
        counts[labels[i]] = counts.get(labels[i], 0) + 1
    keep_classes = {c for c, n in counts.items() if n >= 2 * folds}
    ids = [i for i in ids if labels[i] in keep_classes]
    if len(keep_classes) < 2:
        raise EvalError(f"fewer than 2 classes with >= {2 * folds} samples survive")
    y = np.array([labels[i] for i in ids], dtype=object)
    out = []
    for t in tables:
        pos = {fid: k for k, fid in enumerate(t.file_ids)}
        out.append(LabeledMatrix(t.values[[pos[i] for i in ids], :], y, list(t.columns), list(ids)))
    return out


class Standardized(NamedTuple):
    X: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    kept: np.ndarray  # indices of retained columns


def standardize(X, allow_empty: bool = False) -> Standardized:
    """Population z-scores; columns with std below 1e-12 are dropped."""
    X = np.asarray(X, dtype=float)
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    kept = np.flatnonzero(stds >= STD_EPS)
    if len(kept) == 0 and not allow_empty:
        raise EvalError("all columns are constant")
    Z = (X[:, kept] - means[kept]) / stds[kept]
    return Standardized(Z, means, stds, kept)


def apply_standardize(X, st: Standardized) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return (X[:, st.kept] - st.means[st.kept]) / st.stds[st.kept]


def pca_fit_transform(Xs, k: int):
    """Top-``k`` eigenvectors of the covariance (1/n) of standardized data.

    Returns ``(scores, components, explained_variance)``. Each component is
    flipped so its largest-magnitude entry is positive.
    """
    Xs = np.asarray(Xs, dtype=float)
    n, d = Xs.shape
    if k < 1 or k > min(n - 1, d):
        raise EvalError(f"k={k} must lie in 1..min(n-1, d)={min(n - 1, d)}")
    cov = Xs.T @ Xs / n
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:k]
    comps = evecs[:, order].T.copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    explained = np.clip(evals[order], 0.0, None)
    return Xs @ comps.T, comps, explained


def balanced_accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=object)
    y_pred = np.asarray(y_pred, dtype=object)
    if len(y_true) == 0 or len(y_true) != len(y_pred):
        raise EvalError("balanced_accuracy needs equal-length, non-empty inputs")
    recalls = [np.mean(y_pred[y_true == c] == c) for c in sorted(set(y_true))]
    return float(np.mean(recalls))


def stratified_folds(y, folds: int, seed: int) -> np.ndarray:
    """Fold index per row: seeded shuffle within each class, then round-robin."""
    y = np.asarray(y, dtype=object)
    rng = np.random.default_rng(seed)
    assign = np.empty(len(y), dtype=int)
    offset = 0
    for c in sorted(set(y)):
        idx = rng.permutation(np.flatnonzero(y == c))
        assign[idx] = (np.arange(len(idx)) + offset) % folds
        offset += len(idx)
    return assign


def _majority(y):
    classes, counts = np.unique(y, return_counts=True)
    return classes[np.argmax(counts)]  # ties go to the lexicographically first class


def knn_predict(Xtr, ytr, Xte, k: int = KNN_K):
    k = min(k, len(ytr))
    d2 = ((Xte[:, None, :] - Xtr[None, :, :]) ** 2).sum(axis=2)
    nn = np.argsort(d2, axis=1, kind="stable")[:, :k]
    out = []
    for row in nn:
        votes: dict = {}
        for j in row:
            votes[ytr[j]] = votes.get(ytr[j], 0) + 1
        top = max(votes.values())
        out.append(next(ytr[j] for j in row if votes[ytr[j]] == top))  # nearest among tied
    return np.array(out, dtype=object)


def logreg_predict(Xtr, ytr, Xte, l2: float = LOGREG_L2, iters: int = LOGREG_ITERS,
                   step: float = LOGREG_STEP):
    classes = np.array(sorted(set(ytr)), dtype=object)
    Y = (ytr[:, None] == classes[None, :]).astype(float)
    n, d = Xtr.shape
    W = np.zeros((d, len(classes)))
    b = np.zeros(len(classes))
    for _ in range(iters):
        logits = Xtr @ W + b
        logits -= logits.max(axis=1, keepdims=True)
        P = np.exp(logits)
        P /= P.sum(axis=1, keepdims=True)
        G = (P - Y) / n
        W -= step * (Xtr.T @ G + l2 * W)
        b -= step * G.sum(axis=0)
    return classes[np.argmax(Xte @ W + b, axis=1)]


def dummy_predict(Xtr, ytr, Xte):
    return np.array([_majority(ytr)] * len(Xte), dtype=object)


PREDICTORS = {"knn": knn_predict, "logreg": logreg_predict, "dummy": dummy_predict}


def _clamp_k(k: int, n: int, d: int) -> int:
    kk = min(k, n - 1, d)
    if kk != k:
        log.warning("PCA k=%d reduced to %d for a %dx%d training matrix", k, kk, n, d)
    return kk


def _preprocess(Xtr, Xte, pca_k):
    st = standardize(Xtr, allow_empty=True)
    Ztr, Zte = st.X, apply_standardize(Xte, st)
    if pca_k and Ztr.shape[1] > 0:
        k = _clamp_k(pca_k, Ztr.shape[0], Ztr.shape[1])
        Ztr, comps, _ = pca_fit_transform(Ztr, k)
        Zte = Zte @ comps.T
    return Ztr, Zte


def cross_validate(M: LabeledMatrix, folds: int = 10, seed: int = 0,
                   pca_k: Optional[int] = None, paper_mode: bool = False) -> EvalResult:
    """Mean test-fold balanced accuracy for each model in the zoo.

    Standardization and PCA are fit on each training fold. ``paper_mode`` fits
    them once on the whole matrix before splitting instead.
    """
    y = M.y
    counts = {c: int((y == c).sum()) for c in set(y)}
    if folds < 2 or min(counts.values()) < folds:
        raise EvalError(f"every class needs at least folds={folds} samples: {counts}")
    X = M.X
    if paper_mode:
        X, _ = _preprocess(X, X[:0], pca_k)
    assign = stratified_folds(y, folds, seed)
    scores = {m: [] for m in MODELS}
    for f in range(folds):
        te = assign == f
        tr = ~te
        if paper_mode:
            Ztr, Zte = X[tr], X[te]
        else:
            Ztr, Zte = _preprocess(X[tr], X[te], pca_k)
        for m in MODELS:
            pred = PREDICTORS[m](Ztr, y[tr], Zte)
            scores[m].append(balanced_accuracy(y[te], pred))
    per_model = {m: float(np.mean(v)) for m, v in scores.items()}
    best = max(MODELS, key=lambda m: per_model[m])
    return EvalResult(per_model, best, folds, seed, {m: [float(s) for s in v]
                                                    for m, v in scores.items()},
                      len(y), M.X.shape[1], pca_k, paper_mode)


def combine_tables(tables: Sequence[FeatureTable], tags: Sequence[str]) -> FeatureTable:
    """Inner join on the key columns, feature columns renamed ``<tag>.<name>``."""
    if len(tables) != len(tags) or len(tables) < 2:
        raise TableError("combine needs at least two tables with one tag each")
    if len(set(tags)) != len(tags):
        raise TableError(f"duplicate tags: {list(tags)}")
    positions = [{k: i for i, k in enumerate(t.keys())} for t in tables]
    keys = [k for k in tables[0].keys() if all(k in p for p in positions[1:])]
    if not keys:
        raise TableError("empty join: the tables share no rows")
    blocks, columns = [], []
    for t, tag, pos in zip(tables, tags, positions):
        blocks.append(t.values[[pos[k] for k in keys], :])
        columns.extend(f"{tag}.{c}" for c in t.columns)
    return FeatureTable(columns, [k[0] for k in keys], [k[1] for k in keys],
                        [k[2] for k in keys], np.hstack(blocks))

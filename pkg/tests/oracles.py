"""Independent reference implementations used to check the package against."""

import math

import numpy as np


def pearson(a, b):
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    va = math.sqrt(sum((x - ma) ** 2 for x in a))
    vb = math.sqrt(sum((y - mb) ** 2 for y in b))
    return cov / (va * vb)


MAJOR = [6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88]
MINOR = [6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17]


def brute_force_key(pc_weights):
    """(tonic, mode) maximizing the correlation with a rotated profile, plain python."""
    best = None
    for tonic in range(12):
        for mode, prof in ((0, MAJOR), (1, MINOR)):
            rotated = [prof[(i - tonic) % 12] for i in range(12)]
            r = pearson(list(pc_weights), rotated)
            if best is None or r > best[0] + 1e-12:
                best = (r, tonic, mode)
    return best[1], best[2]


def jacobi_eigh(A, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi eigenvalue algorithm for a symmetric matrix."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = math.sqrt(sum(A[i, j] ** 2 for i in range(n) for j in range(n) if i != j))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                V = V @ J
    return np.diag(A).copy(), V


def nan_filter_oracle(rows):
    """Row/column NaN filter written straight from the formula, on lists of lists.

    Returns (kept row indices, kept column indices).
    """
    R = len(rows)
    C = len(rows[0]) if R else 0
    clean_cols = [j for j in range(C) if all(not math.isnan(rows[i][j]) for i in range(R))]
    r = len(clean_cols) / R
    kept = list(range(R))
    if r < 0.1:
        counts = [sum(1 for v in row if math.isnan(v)) for row in rows]
        ordered = sorted(counts)
        q99 = ordered[math.ceil(0.99 * R - 1e-12) - 1]
        kept = [i for i in range(R) if not counts[i] > q99 / 0.99]
    cols = [j for j in range(C) if all(not math.isnan(rows[i][j]) for i in kept)]
    return kept, cols


def nearest_centroid_cv(X, y, folds, seed):
    """Balanced accuracy of a nearest-centroid classifier under shuffled k-fold."""
    rng = np.random.default_rng(seed)
    idx = rng.permutation(len(y))
    parts = np.array_split(idx, folds)
    accs = []
    for k in range(folds):
        te = parts[k]
        tr = np.concatenate([parts[j] for j in range(folds) if j != k])
        classes = sorted(set(y[tr]))
        cents = np.array([X[tr][y[tr] == c].mean(axis=0) for c in classes])
        pred = np.array([classes[np.argmin(((cents - x) ** 2).sum(axis=1))] for x in X[te]])
        rec = [np.mean(pred[y[te] == c] == c) for c in sorted(set(y[te]))]
        accs.append(np.mean(rec))
    return float(np.mean(accs))

"""Interval labels, multi-label k-NN evaluation, interval cluster distances and
context sensitivity of a trained model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gae import BINARY, ContextPair, GaeParams, mappings, shift

MAX_INTERVAL = 24
INTERVALS = np.arange(-MAX_INTERVAL, MAX_INTERVAL + 1)
N_LABELS = INTERVALS.size


def label_pair(pair: ContextPair, max_interval: int = MAX_INTERVAL) -> frozenset[int]:
    """All signed intervals q - p between a pitch p sounding anywhere in the
    context and a pitch q in the target, clamped to +-max_interval."""
    context, target = pair.context, pair.target
    ctx = np.flatnonzero(np.asarray(context).reshape(-1, np.shape(target)[-1]).any(axis=0))
    tgt = np.flatnonzero(np.asarray(target))
    if ctx.size == 0 or tgt.size == 0:
        return frozenset()
    diffs = (tgt[:, None] - ctx[None, :]).ravel()
    return frozenset(int(d) for d in diffs if abs(d) <= max_interval)


def label_matrix(contexts: np.ndarray, targets: np.ndarray, max_interval: int = MAX_INTERVAL) -> np.ndarray:
    """Boolean (N, 2*max_interval+1) label indicator; column c is interval c - max_interval."""
    Y = np.asarray(targets) > 0
    N, P = Y.shape
    active = np.asarray(contexts).reshape(N, -1, P).any(axis=1)
    out = np.zeros((N, 2 * max_interval + 1), dtype=bool)
    # interval d present iff some q with Y[q] and active[q - d]
    for d in range(-max_interval, max_interval + 1):
        if d >= 0:
            hit = (Y[:, d:] & active[:, : P - d]).any(axis=1) if d < P else np.zeros(N, bool)
        else:
            hit = (Y[:, : P + d] & active[:, -d:]).any(axis=1) if -d < P else np.zeros(N, bool)
        out[:, d + max_interval] = hit
    return out


def labels_to_sets(L: np.ndarray, max_interval: int = MAX_INTERVAL) -> list[frozenset[int]]:
    return [frozenset(int(c) - max_interval for c in np.flatnonzero(row)) for row in L]


@dataclass
class KnnReport:
    precision: float
    recall: float
    f1: float
    n_scored: int
    n_empty: int
    folds: list["KnnReport"] = field(default_factory=list)

    def as_row(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1,
                "n_scored": self.n_scored, "n_empty": self.n_empty}


def _prf(pred: np.ndarray, true: np.ndarray) -> KnnReport:
    """Per-point precision/recall/F1 averaged over points with a non-empty truth."""
    keep = true.any(axis=1)
    pred, true = pred[keep], true[keep]
    tp = (pred & true).sum(axis=1)
    npred = pred.sum(axis=1)
    p = np.divide(tp, npred, out=np.zeros(tp.shape), where=npred > 0)
    r = tp / true.sum(axis=1)
    f = np.divide(2 * p * r, p + r, out=np.zeros(tp.shape), where=(p + r) > 0)
    n = int(keep.sum())
    if n == 0:
        return KnnReport(0.0, 0.0, 0.0, 0, int((~keep).sum()))
    return KnnReport(float(p.mean()), float(r.mean()), float(f.mean()), n, int((~keep).sum()))


def nearest_neighbors(train: np.ndarray, test: np.ndarray, k: int, chunk: int = 512) -> np.ndarray:
    """Indices of the k Euclidean nearest training points per test point;
    equal distances go to the lower training index."""
    train = np.asarray(train, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if k > train.shape[0]:
        raise ValueError(f"k={k} exceeds the {train.shape[0]} training points")
    if train.shape[1] != test.shape[1]:
        raise ValueError("train and test points differ in dimensionality")
    sq = np.sum(train ** 2, axis=1)
    out = np.empty((test.shape[0], k), dtype=int)
    for s in range(0, test.shape[0], chunk):
        t = test[s:s + chunk]
        d2 = np.sum(t ** 2, axis=1)[:, None] - 2 * t @ train.T + sq[None, :]
        d2 = np.round(np.maximum(d2, 0.0), 10)  # ties survive float noise
        out[s:s + chunk] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return out


def knn_classify(train_points, train_labels, test_points, test_labels, k: int = 10) -> KnnReport:
    """Predict the union of the k nearest neighbours' label sets."""
    train_labels = np.asarray(train_labels, dtype=bool)
    nn = nearest_neighbors(train_points, test_points, k)
    pred = train_labels[nn].any(axis=1)
    return _prf(pred, np.asarray(test_labels, dtype=bool))


def knn_cross_validate(points, labels, k: int = 10, folds: int = 10, seed: int = 0,
                       test_points=None) -> KnnReport:
    """k-fold k-NN; ``test_points`` (same order as ``points``) replaces the
    held-out fold's coordinates, e.g. with transposed versions."""
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    tpoints = points if test_points is None else np.asarray(test_points, dtype=np.float64)
    order = np.random.default_rng(seed).permutation(points.shape[0])
    parts = np.array_split(order, folds)
    reports = []
    for f in range(folds):
        test = np.sort(parts[f])
        train = np.sort(np.concatenate([parts[g] for g in range(folds) if g != f]))
        reports.append(knn_classify(points[train], labels[train], tpoints[test], labels[test], k))
    n = sum(r.n_scored for r in reports)
    w = np.array([r.n_scored for r in reports], dtype=float) / max(n, 1)
    return KnnReport(
        float(sum(wi * r.precision for wi, r in zip(w, reports))),
        float(sum(wi * r.recall for wi, r in zip(w, reports))),
        float(sum(wi * r.f1 for wi, r in zip(w, reports))),
        n, sum(r.n_empty for r in reports), reports,
    )


def predict_all_baseline(labels) -> KnnReport:
    labels = np.asarray(labels, dtype=bool)
    return _prf(np.ones_like(labels), labels)


@dataclass
class ClusterDistanceMatrix:
    D: np.ndarray  # K x K, NaN rows/cols for labels without members
    intervals: np.ndarray
    counts: np.ndarray

    @property
    def missing(self) -> np.ndarray:
        return self.counts == 0


def cluster_distance_matrix(mappings, labels, max_interval: int = MAX_INTERVAL) -> ClusterDistanceMatrix:
    """Distances between per-interval centres; a mapping counts towards every
    interval in its label set."""
    M = np.asarray(mappings, dtype=np.float64)
    L = np.asarray(labels, dtype=bool)
    counts = L.sum(axis=0)
    centers = (L.T.astype(np.float64) @ M) / np.maximum(counts, 1)[:, None]
    diff = centers[:, None, :] - centers[None, :, :]
    D = np.sqrt(np.sum(diff ** 2, axis=2))
    np.fill_diagonal(D, 0.0)
    miss = counts == 0
    D[miss, :] = np.nan
    D[:, miss] = np.nan
    return ClusterDistanceMatrix(D, np.arange(-max_interval, max_interval + 1), counts)


def sensitivity(p: GaeParams, contexts, targets, kind: str = BINARY, chunk: int = 1024) -> np.ndarray:
    """Mean absolute gradient of the summed reconstruction w.r.t. each context
    frame (summed over pitch), mapping and parameters held fixed.

    Entry 0 is the oldest context frame, entry L-1 the frame right before the
    target.
    """
    X = np.asarray(contexts, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64)
    N = X.shape[0]
    X = X.reshape(N, -1)
    P = p.input_dim
    L = X.shape[1] // P
    total = np.zeros(L)
    for s in range(0, N, chunk):
        x, y = X[s:s + chunk], Y[s:s + chunk]
        C = x @ p.U.T
        M = np.tanh(np.tanh((C * (y @ p.V.T)) @ p.W0.T) @ p.W1.T)
        G = (M @ p.W1) @ p.W0
        A = (G * C) @ p.V
        if kind == BINARY:
            R = 0.5 * (1.0 + np.tanh(0.5 * A))
            dA = R * (1.0 - R)
        else:
            dA = np.ones_like(A)
        dX = ((dA @ p.V.T) * G) @ p.U
        total += np.abs(dX).reshape(-1, L, P).sum(axis=2).sum(axis=0)
    return total / max(N, 1)


@dataclass(frozen=True)
class InvarianceReport:
    ratio: float
    median_shifted: float
    median_random: float
    n_pairs: int


def _in_range_offsets(rows: np.ndarray, P: int, limit: int) -> np.ndarray:
    if rows.size == 0:
        return np.array([d for d in range(-limit, limit + 1) if d != 0])
    lo, hi = rows.min(), rows.max()
    return np.array([d for d in range(-limit, limit + 1) if d != 0 and lo - d >= 0 and hi - d < P])


def invariance_ratio(p: GaeParams, contexts, targets, shift_range: int, n_pairs: int = 500,
                     seed: int = 0) -> InvarianceReport:
    """Median mapping distance between a pair and a transposed copy of it,
    relative to the median distance to a random other pair.

    Each sampled pair gets its own non-zero offset in ``[-shift_range, shift_range]``
    chosen so that no active pitch wraps around.
    """
    X = np.asarray(contexts, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64)
    N, P = Y.shape
    X = X.reshape(N, -1, P)
    rng = np.random.default_rng(seed)
    idx = rng.choice(N, size=min(n_pairs, N), replace=False)
    offsets = []
    for i in idx:
        rows = np.flatnonzero(X[i].any(axis=0) | (Y[i] != 0))
        offsets.append(int(rng.choice(_in_range_offsets(rows, P, shift_range))))
    others = (idx + rng.integers(1, N, size=idx.size)) % N
    Xs = np.stack([shift(X[i], d) for i, d in zip(idx, offsets)]).reshape(idx.size, -1)
    Ys = np.stack([shift(Y[i], d) for i, d in zip(idx, offsets)])
    M = mappings(p, X[idx].reshape(idx.size, -1), Y[idx])
    Ms = mappings(p, Xs, Ys)
    Mo = mappings(p, X[others].reshape(idx.size, -1), Y[others])
    ds = float(np.median(np.linalg.norm(M - Ms, axis=1)))
    dr = float(np.median(np.linalg.norm(M - Mo, axis=1)))
    return InvarianceReport(ds / dr if dr > 0 else float("inf"), ds, dr, int(idx.size))

"""Repeated-section discovery on a self-similarity matrix of mapping codes.

Pipeline: :func:`build_ssm` -> :func:`trace_diagonals` -> :func:`extract_groups`,
plus :func:`evaluate_sections`, a frame-overlap precision/recall scorer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

WINDOW = 10
SSM_EPS = 1e-6
KERNEL = 15

GAMMA_SYMBOLIC = 0.9
GAMMA_AUDIO = 0.81
MIN_LEN_SYMBOLIC = 32  # two whole notes of sixteenths
MERGE_TOL_SYMBOLIC = 8  # a half note
MIN_LEN_AUDIO = 36
MERGE_TOL_AUDIO = 9


@dataclass
class SimilarityMatrix:
    X: np.ndarray
    degenerate: bool = False
    # row r of X describes frames r .. r + context_frames of the piece
    context_frames: int = 0

    @property
    def size(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class DiagonalHit:
    i: int
    j: int
    N: int
    score: float


@dataclass(frozen=True, order=True)
class SectionOccurrence:
    start: int
    end: int

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"empty occurrence [{self.start}, {self.end})")

    def __len__(self):
        return self.end - self.start


@dataclass
class PatternGroup:
    occurrences: list[SectionOccurrence] = field(default_factory=list)

    def __post_init__(self):
        if len(set(self.occurrences)) != len(self.occurrences):
            raise ValueError("duplicate occurrences in a pattern group")


# --- similarity matrix -------------------------------------------------------

def _minmax(X: np.ndarray) -> np.ndarray | None:
    lo, hi = X.min(), X.max()
    if hi - lo <= 0:
        return None
    return (X - lo) / (hi - lo)


def diagonal_smooth(X: np.ndarray, size: int = KERNEL) -> np.ndarray:
    """Convolution with a ``size`` x ``size`` identity kernel scaled by 1/size,
    zero padding, output the same shape as ``X``."""
    T = X.shape[0]
    half = size // 2
    P = np.zeros((T + 2 * half, T + 2 * half))
    P[half:half + T, half:half + T] = X
    out = np.zeros_like(X, dtype=np.float64)
    for k in range(size):
        out += P[k:k + T, k:k + T]
    return out / size


def build_ssm(mappings: np.ndarray, eps: float = SSM_EPS, kernel: int = KERNEL,
              context_frames: int = 0) -> SimilarityMatrix:
    """Reciprocal-distance similarity of a mapping trajectory (T x H2).

    The main diagonal is overwritten with the matrix minimum before min-max
    normalization, identity-kernel smoothing and a second normalization.
    """
    M = np.asarray(mappings, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] < 2:
        raise ValueError("need at least two mapping vectors")
    T = M.shape[0]
    X = 1.0 / (cdist(M, M) + eps)
    X = 0.5 * (X + X.T)
    off = ~np.eye(T, dtype=bool)
    np.fill_diagonal(X, X[off].min())
    Xn = _minmax(X)
    if Xn is None:
        return SimilarityMatrix(np.ones((T, T)), degenerate=True, context_frames=context_frames)
    Xs = _minmax(diagonal_smooth(Xn, kernel))
    if Xs is None:
        return SimilarityMatrix(np.ones((T, T)), degenerate=True, context_frames=context_frames)
    return SimilarityMatrix(0.5 * (Xs + Xs.T), context_frames=context_frames)


# --- diagonal scoring --------------------------------------------------------

def ideal_score(N: int, window: int = WINDOW) -> float:
    """Score of a diagonal that is 1 everywhere: (m+1)(m+2) / (2 m^2)."""
    m = min(window, N)
    return (m + 1) * (m + 2) / (2.0 * m * m)


def score_diagonal(X, i: int, j: int, N: int, normalized: bool = False, window: int = WINDOW) -> float:
    """Weighted tail score of the diagonal starting at (i, j) with length N.

    Sums the m+1 cells k = N-m .. N with weights (1+k+m-N)/m and divides by
    m, m = min(window, N). With ``normalized`` the result is divided by
    :func:`ideal_score`, so a diagonal of ones scores exactly 1.
    """
    X = X.X if isinstance(X, SimilarityMatrix) else np.asarray(X)
    T = X.shape[0]
    if N < 1 or min(i, j) < 0 or max(i, j) + N >= T:
        raise IndexError(f"diagonal ({i}, {j}) of length {N} leaves the {T}x{T} matrix")
    m = min(window, N)
    k = np.arange(N - m, N + 1)
    w = (1 + k + m - N) / m
    s = float(np.sum(X[i + k, j + k] * w) / m)
    return s / ideal_score(N, window) if normalized else s


def _trace_offset(v: np.ndarray, gamma: float, window: int) -> np.ndarray:
    """Traced length for every start on one diagonal (0 = no hit)."""
    n = v.size
    lengths = np.zeros(max(n - 1, 0), dtype=int)
    if n < 2:
        return lengths
    starts = np.arange(n - 1)
    fail = np.full(n - 1, -1)
    # short windows: m = N < window
    for N in range(1, min(window, n)):
        m = N
        ker = np.arange(1, m + 2) / (m * m)
        c = np.correlate(v, ker, mode="valid")  # c[i] = score(i, N) for i + N <= n - 1
        bad = np.zeros(n - 1, dtype=bool)
        bad[: c.size] = c < gamma * ideal_score(N, window)
        fail[(fail < 0) & bad] = N
    # long windows: score(i, N) = c10[i + N - window] for N >= window
    bound = n - starts  # first N that leaves the matrix
    if n - 1 >= window:
        ker = np.arange(1, window + 2) / (window * window)
        c = np.correlate(v, ker, mode="valid")  # length n - window
        bad = c < gamma * ideal_score(window, window)
        nxt = np.full(c.size + 1, c.size)
        for p in range(c.size - 1, -1, -1):
            nxt[p] = p if bad[p] else nxt[p + 1]
        todo = (fail < 0) & (starts <= n - 1 - window)
        q = nxt[starts[todo]]
        fail[todo] = np.where(q < c.size, q + window - starts[todo], bound[todo])
    still = fail < 0
    fail[still] = bound[still]
    return fail - 1


def _suppress(lengths: np.ndarray) -> list[tuple[int, int]]:
    """Longest-first acceptance of non-overlapping spans [i, i + N)."""
    order = sorted((i for i in range(lengths.size) if lengths[i] >= 1), key=lambda i: (-lengths[i], i))
    taken = np.zeros(lengths.size + int(lengths.max(initial=0)) + 1, dtype=bool)
    out = []
    for i in order:
        N = int(lengths[i])
        if not taken[i:i + N].any():
            taken[i:i + N] = True
            out.append((i, N))
    return sorted(out)


def trace_diagonals(X, gamma: float = GAMMA_SYMBOLIC, window: int = WINDOW) -> list[DiagonalHit]:
    """Grow a diagonal from every upper-triangle start while its normalized
    score stays at or above ``gamma``; keep non-overlapping hits per offset,
    longest first."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    X = X.X if isinstance(X, SimilarityMatrix) else np.asarray(X, dtype=np.float64)
    T = X.shape[0]
    hits = []
    for d in range(1, T):
        v = np.diagonal(X, d)
        lengths = _trace_offset(v, gamma, window)
        for i, N in _suppress(lengths):
            hits.append(DiagonalHit(i, i + d, N, score_diagonal(X, i, i + d, N, normalized=True, window=window)))
    return hits


# --- grouping ----------------------------------------------------------------

class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def extract_groups(hits: list[DiagonalHit], min_len_frames: int = MIN_LEN_SYMBOLIC,
                   merge_tol_frames: int = MERGE_TOL_SYMBOLIC) -> list[PatternGroup]:
    """Turn long hits into groups of mutually repeating occurrences.

    Each kept hit contributes two occurrences that repeat each other.
    Occurrences whose starts and ends both lie within ``merge_tol_frames``
    are the same section; they collapse to their (rounded) mean boundaries.
    """
    kept = [h for h in hits if h.N > min_len_frames]
    occ = []
    for h in kept:
        occ.append((h.i, h.i + h.N))
        occ.append((h.j, h.j + h.N))
    n = len(occ)
    if n == 0:
        return []
    same = _UnionFind(n)
    starts = np.array([o[0] for o in occ])
    ends = np.array([o[1] for o in occ])
    for a in range(n):
        close = np.flatnonzero((np.abs(starts - starts[a]) <= merge_tol_frames)
                               & (np.abs(ends - ends[a]) <= merge_tol_frames))
        for b in close:
            same.union(a, int(b))
    linked = _UnionFind(n)
    for a in range(n):
        linked.union(a, same.find(a))
    for h in range(len(kept)):
        linked.union(2 * h, 2 * h + 1)

    sections: dict[int, SectionOccurrence] = {}
    members: dict[int, list[int]] = {}
    for a in range(n):
        members.setdefault(same.find(a), []).append(a)
    for root, idx in members.items():
        s = int(np.floor(np.mean(starts[idx]) + 0.5))
        e = int(np.floor(np.mean(ends[idx]) + 0.5))
        sections[root] = SectionOccurrence(s, max(e, s + 1))

    groups: dict[int, set] = {}
    for root in sections:
        groups.setdefault(linked.find(root), set()).add(sections[root])
    out = [PatternGroup(sorted(g)) for g in groups.values() if len(g) >= 2]
    out.sort(key=lambda g: (g.occurrences[0].start, g.occurrences[0].end))
    return out


# --- evaluation --------------------------------------------------------------

def jaccard(a: SectionOccurrence, b: SectionOccurrence) -> float:
    inter = max(0, min(a.end, b.end) - max(a.start, b.start))
    union = len(a) + len(b) - inter
    return inter / union


def group_similarity(found: PatternGroup, truth: PatternGroup) -> float:
    """Symmetric mean best-match Jaccard between the occurrences of two groups."""
    if not found.occurrences or not truth.occurrences:
        return 0.0
    J = np.array([[jaccard(f, t) for t in truth.occurrences] for f in found.occurrences])
    return 0.5 * (J.max(axis=0).mean() + J.max(axis=1).mean())


@dataclass
class SectionScore:
    precision: float
    recall: float
    f1: float
    matched: int


def evaluate_sections(found: list[PatternGroup], truth: list[PatternGroup], threshold: float = 0.5) -> SectionScore:
    """Greedy one-to-one matching by group similarity; a pair counts when its
    similarity reaches ``threshold``."""
    pairs = sorted(
        ((group_similarity(f, t), a, b) for a, f in enumerate(found) for b, t in enumerate(truth)),
        key=lambda x: (-x[0], x[1], x[2]),
    )
    used_f, used_t = set(), set()
    correct = 0
    for sim, a, b in pairs:
        if a in used_f or b in used_t:
            continue
        used_f.add(a)
        used_t.add(b)
        if sim >= threshold:
            correct += 1
    precision = correct / len(found) if found else 0.0
    recall = correct / len(truth) if truth else (1.0 if not found else 0.0)
    if not truth and not found:
        precision = 1.0
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return SectionScore(precision, recall, f1, correct)


def rows_to_frames(groups: list[PatternGroup], context_frames: int) -> list[PatternGroup]:
    """Map occurrences in SSM rows to piece frames: row r spans frames r .. r + L."""
    out = []
    for g in groups:
        occ = sorted({SectionOccurrence(o.start, o.end + context_frames) for o in g.occurrences})
        if len(occ) >= 2:
            out.append(PatternGroup(occ))
    return out

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from intervalgae.discovery import (
    DiagonalHit, PatternGroup, SectionOccurrence, build_ssm, diagonal_smooth, evaluate_sections,
    extract_groups, ideal_score, rows_to_frames, score_diagonal, trace_diagonals,
)


def occ(*spans):
    return PatternGroup([SectionOccurrence(a, b) for a, b in spans])


def test_literal_score_of_a_unit_diagonal():
    X = np.ones((5, 5))
    assert score_diagonal(X, 0, 1, 1) == pytest.approx(3.0)
    assert score_diagonal(X, 0, 1, 1, normalized=True) == pytest.approx(1.0)
    assert ideal_score(1) == pytest.approx(3.0)
    assert score_diagonal(np.zeros((5, 5)), 0, 1, 3) == 0.0


def test_score_weights_grow_along_the_tail():
    T = 30
    for k in range(11):
        X = np.zeros((T, T))
        X[k + 2, k + 2 + 5] = 1.0
        assert score_diagonal(X, 2, 7, 10) == pytest.approx((1 + k) / 100)


def test_score_bounds():
    with pytest.raises(IndexError):
        score_diagonal(np.ones((5, 5)), 0, 2, 3)
    with pytest.raises(IndexError):
        score_diagonal(np.ones((5, 5)), 0, 1, 0)


def brute_force_trace(X, gamma, window=10):
    T = X.shape[0]
    hits = []
    for d in range(1, T):
        lengths = np.zeros(T - d - 1, dtype=int)
        for i in range(T - d - 1):
            N = 1
            while i + d + N < T and score_diagonal(X, i, i + d, N, normalized=True, window=window) >= gamma:
                N += 1
            lengths[i] = N - 1
        taken = np.zeros(T, bool)
        for i in sorted(range(lengths.size), key=lambda i: (-lengths[i], i)):
            N = lengths[i]
            if N >= 1 and not taken[i:i + N].any():
                taken[i:i + N] = True
                hits.append((i, i + d, int(N)))
    return sorted(hits)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(8, 40), st.floats(0.2, 0.9))
def test_trace_matches_brute_force(seed, T, gamma):
    rng = np.random.default_rng(seed)
    X = rng.random((T, T)) ** 0.3
    X = 0.5 * (X + X.T)
    got = sorted((h.i, h.j, h.N) for h in trace_diagonals(X, gamma))
    assert got == brute_force_trace(X, gamma)


def test_zero_matrix_has_no_hits():
    assert trace_diagonals(np.zeros((30, 30))) == []
    with pytest.raises(ValueError):
        trace_diagonals(np.zeros((3, 3)), gamma=0)


def test_planted_diagonals():
    T = 120
    X = np.zeros((T, T))
    for k in range(40):
        X[10 + k, 60 + k] = X[60 + k, 10 + k] = 1.0
    hits = trace_diagonals(X, 0.9)
    assert len(hits) == 1
    h = hits[0]
    assert abs(h.i - 10) <= 1 and h.j - h.i == 50 and abs(h.N - 40) <= 2
    for k in range(30):
        X[5 + k, 90 + k] = 1.0
    hits = trace_diagonals(X, 0.9)
    assert sorted(h.j - h.i for h in hits) == [50, 85]


def test_ssm_of_a_repeated_subsequence():
    rng = np.random.default_rng(0)
    M = rng.normal(size=(100, 8))
    M[50:70] = M[0:20]
    S = build_ssm(M)
    assert np.allclose(S.X, S.X.T) and S.X.min() >= 0 and S.X.max() == pytest.approx(1.0)
    hits = [h for h in trace_diagonals(S, 0.5) if h.j - h.i == 50]
    assert max(h.N for h in hits) >= 15


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(2, 40))
def test_ssm_is_symmetric_and_bounded(seed, T):
    S = build_ssm(np.random.default_rng(seed).normal(size=(T, 4)))
    assert np.array_equal(S.X, S.X.T) and S.X.min() >= 0 and S.X.max() <= 1


def test_degenerate_ssm():
    S = build_ssm(np.ones((10, 3)))
    assert S.degenerate and np.all(S.X == 1)
    with pytest.raises(ValueError):
        build_ssm(np.ones((1, 3)))


def test_identity_kernel_smoothing():
    X = np.zeros((20, 20))
    X[5, 5] = 15.0
    Y = diagonal_smooth(X)
    # the impulse spreads along the main diagonal, clipped at the border
    assert np.count_nonzero(Y) == 13 and np.all(np.diag(Y)[0:13] == 1.0) and Y.sum() == pytest.approx(13.0)


def test_group_examples():
    assert extract_groups([]) == []
    assert extract_groups([DiagonalHit(0, 100, 40, 1.0)]) == [occ((0, 40), (100, 140))]
    assert extract_groups([DiagonalHit(0, 100, 32, 1.0)]) == []
    g = extract_groups([DiagonalHit(0, 100, 40, 1.0), DiagonalHit(2, 200, 39, 1.0)])
    assert len(g) == 1 and len(g[0].occurrences) == 3
    assert g[0].occurrences[1:] == [SectionOccurrence(100, 140), SectionOccurrence(200, 239)]


def test_unrelated_hits_stay_apart():
    g = extract_groups([DiagonalHit(0, 100, 40, 1.0), DiagonalHit(300, 400, 40, 1.0)])
    assert [len(x.occurrences) for x in g] == [2, 2] and g[0].occurrences[0].start == 0


@settings(max_examples=30)
@given(st.lists(st.tuples(st.integers(0, 200), st.integers(1, 200), st.integers(33, 60)), max_size=6))
def test_groups_never_pair_an_occurrence_with_itself(raw):
    hits = [DiagonalHit(i, i + d, N, 1.0) for i, d, N in raw]
    for g in extract_groups(hits):
        assert len(g.occurrences) >= 2 and len(set(g.occurrences)) == len(g.occurrences)


def test_section_scores():
    a, b = occ((0, 40), (100, 140)), occ((200, 240), (300, 340))
    s = evaluate_sections([a, b], [a, b])
    assert (s.precision, s.recall, s.f1) == (1.0, 1.0, 1.0)
    s = evaluate_sections([], [a])
    assert s.recall == 0 and s.precision == 0
    s = evaluate_sections([a], [a, b])
    assert s.recall == 0.5 and s.precision == 1.0


def test_rows_to_frames():
    assert rows_to_frames([occ((0, 40), (100, 140))], 9) == [occ((0, 49), (100, 149))]

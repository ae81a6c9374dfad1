"""Synthetic melody corpora built from repeated, transposed motifs.

Used by the experiment scripts and the test-suite in place of real corpora.
Pitches are roll rows (0..P-1), not MIDI numbers.
"""

from __future__ import annotations

import numpy as np

STEPS = np.array([-7, -5, -4, -3, -2, -1, 0, 1, 2, 3, 4, 5, 7])
DURATIONS = np.array([1, 2, 2, 2, 4])


def random_motif(rng: np.random.Generator, n_notes: int | None = None,
                 durations: np.ndarray = DURATIONS) -> list[tuple[int, int]]:
    """A short motif as (relative pitch, duration in frames) tuples."""
    if n_notes is None:
        n_notes = int(rng.integers(3, 7))
    pitch = 0
    notes = []
    for _ in range(n_notes):
        notes.append((pitch, int(rng.choice(durations))))
        pitch += int(rng.choice(STEPS))
    return notes


def motif_melody(rng: np.random.Generator, n_frames: int = 64, P: int = 60,
                 low: int = 0, high: int = 60, max_transpose: int = 7,
                 motif: list[tuple[int, int]] | None = None) -> np.ndarray:
    """Monophonic piece: one motif repeated with a fresh transposition each time.

    All notes stay inside rows ``[low, high)`` so the whole piece can be
    transposed by a few semitones without wrapping.
    """
    if motif is None:
        motif = random_motif(rng)
    rel = np.array([n[0] for n in motif])
    span = rel.max() - rel.min()
    roll = np.zeros((n_frames, P), dtype=np.uint8)
    base = int(rng.integers(low - rel.min(), max(low - rel.min() + 1, high - rel.max())))
    f = 0
    while f < n_frames:
        base = base + int(rng.integers(-max_transpose, max_transpose + 1))
        base = int(np.clip(base, low - rel.min(), high - 1 - rel.max())) if span < high - low else low
        for r, dur in motif:
            if f >= n_frames:
                break
            roll[f:f + dur, base + r] = 1
            f += dur
    return roll


def motif_corpus(n_pieces: int = 200, n_frames: int = 64, P: int = 60, seed: int = 0,
                 n_motifs: int | None = 16, durations: np.ndarray = DURATIONS,
                 **kw) -> list[np.ndarray]:
    """``n_pieces`` melodies; with ``n_motifs`` set, motifs come from a shared pool."""
    rng = np.random.default_rng(seed)
    pool = None if n_motifs is None else [random_motif(rng, durations=durations) for _ in range(n_motifs)]
    out = []
    for _ in range(n_pieces):
        motif = None if pool is None else pool[int(rng.integers(len(pool)))]
        if motif is None:
            motif = random_motif(rng, durations=durations)
        out.append(motif_melody(rng, n_frames, P, motif=motif, **kw))
    return out


def pitch_bounds(frames: np.ndarray) -> tuple[int, int] | None:
    """Lowest and highest active row over a set of frames, or None if silent."""
    active = np.flatnonzero(np.asarray(frames).reshape(-1, np.shape(frames)[-1]).any(axis=0))
    if active.size == 0:
        return None
    return int(active[0]), int(active[-1])


def in_range_shifts(frames: np.ndarray, limit: int) -> np.ndarray:
    """Offsets ``d`` (non-zero, |d| <= limit) for which ``shift(frames, d)`` wraps nothing.

    ``shift`` maps row i+d to row i, so content moves *down* by d.
    """
    P = np.shape(frames)[-1]
    b = pitch_bounds(frames)
    if b is None:
        return np.array([d for d in range(-limit, limit + 1) if d != 0])
    lo, hi = b
    return np.array([d for d in range(-limit, limit + 1) if d != 0 and lo - d >= 0 and hi - d < P])

"""Write the three-statement note-list fixture used by the end-to-end test.

Layout in sixteenth-note frames (ppq 4, one tick per frame): free material,
theme, free material, exact repeat, free material, repeat transposed up five
semitones, free material.
"""

import argparse

import numpy as np

from intervalgae.symbolic import NoteEvent, format_notelist

THEME_FRAMES = 64
GAP_FRAMES = 16


def melody(rng, n_frames, low, high, start=None):
    """Stepwise random melody as (onset, duration, pitch) over ``n_frames``."""
    notes, t = [], 0
    pitch = int(rng.integers(low, high)) if start is None else start
    while t < n_frames:
        dur = min(int(rng.choice([1, 2, 2, 3, 4])), n_frames - t)
        notes.append((t, dur, pitch))
        t += dur
        pitch = int(np.clip(pitch + rng.choice([-5, -3, -2, -1, 1, 2, 3, 4, 7]), low, high))
    return notes


def build(seed=0):
    rng = np.random.default_rng(seed)
    theme = melody(rng, THEME_FRAMES, 60, 76)
    sections = [("free", None), ("theme", 0), ("free", None), ("theme", 0),
                ("free", None), ("theme", 5), ("free", None)]
    notes, t, truth = [], 0, []
    for kind, k in sections:
        if kind == "free":
            part = melody(rng, GAP_FRAMES, 52, 84)
            n = GAP_FRAMES
        else:
            part = [(o, d, p + k) for o, d, p in theme]
            n = THEME_FRAMES
            truth.append((t, t + n))
        notes += [NoteEvent(t + o, d, p) for o, d, p in part]
        t += n
    return notes, truth


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="tests/data/three_statements.txt")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    notes, truth = build(args.seed)
    header = "# statements (frames): " + " ".join(f"{a}:{b}" for a, b in truth) + "\n"
    with open(args.out, "w") as fh:
        fh.write(header + format_notelist(notes, 4))
    print(f"{len(notes)} notes, statements at {truth} -> {args.out}")


if __name__ == "__main__":
    main()

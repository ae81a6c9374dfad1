"""Train on the three-statement fixture and report what discovery finds for a
range of SSM epsilons and thresholds.

    python scripts/discovery_demo.py --eps 1e-6 0.5 2 --gamma 0.9 0.81
"""

import argparse
from pathlib import Path

import numpy as np

from intervalgae.cli import discover
from intervalgae.discovery import MERGE_TOL_SYMBOLIC, MIN_LEN_SYMBOLIC
from intervalgae.formats import load_checkpoint, parse_run_config
from intervalgae.symbolic import read_notes, to_pianoroll
from intervalgae.trainer import pair_arrays, train

FIXTURE = Path(__file__).resolve().parent.parent / "tests" / "data" / "three_statements.txt"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fixture", default=str(FIXTURE))
    ap.add_argument("--checkpoint", help="use this model instead of training on the fixture")
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-6])
    ap.add_argument("--gamma", type=float, nargs="+", default=[0.9])
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    args = ap.parse_args()

    notes, tpq = read_notes(args.fixture)
    frames = to_pianoroll(notes, tpq).frames.astype(np.float64)
    if args.checkpoint:
        p, _ = load_checkpoint(args.checkpoint)
    else:
        rc = parse_run_config(overrides=dict(kv.split("=", 1) for kv in args.set))
        X, Y = pair_arrays(frames, rc.model.context_frames)
        p = train(X, Y, rc.model, rc.train).params
    for eps in args.eps:
        for gamma in args.gamma:
            _, hits, groups = discover(p, frames, gamma, MIN_LEN_SYMBOLIC, MERGE_TOL_SYMBOLIC, eps)
            shown = " | ".join(" ".join(f"{o.start}:{o.end}" for o in g.occurrences) for g in groups)
            print(f"eps={eps:g} gamma={gamma:g} hits={len(hits)} groups: {shown or 'none'}")


if __name__ == "__main__":
    main()

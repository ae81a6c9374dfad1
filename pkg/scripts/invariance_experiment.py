"""Train on the synthetic motif corpus and report loss descent and the
transposition-invariance ratio of the learned mappings on held-out pieces.

    python scripts/invariance_experiment.py --steps 5000 --set l2_weight=0.1
"""

import argparse
import time

import numpy as np

from intervalgae.analysis import invariance_ratio
from intervalgae.formats import parse_run_config, save_checkpoint
from intervalgae.gae import init_params
from intervalgae.numerics import make_rng
from intervalgae.synthetic import motif_corpus
from intervalgae.trainer import corpus_arrays, train


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=5000)
    ap.add_argument("--pieces", type=int, default=200)
    ap.add_argument("--held-out", type=int, default=40)
    ap.add_argument("--corpus-seed", type=int, default=1)
    ap.add_argument("--register", type=int, nargs=2, default=(0, 60), metavar=("LOW", "HIGH"),
                    help="roll rows the synthetic melodies may use")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--every", type=int, default=1000)
    ap.add_argument("--checkpoint", help="write the trained model here")
    args = ap.parse_args()

    overrides = dict(kv.split("=", 1) for kv in args.set)
    overrides["total_steps"] = str(args.steps)
    rc = parse_run_config(overrides=overrides)
    mc, tc = rc.model, rc.train

    pieces = motif_corpus(args.pieces + args.held_out, seed=args.corpus_seed,
                          low=args.register[0], high=args.register[1])
    X, Y = corpus_arrays(pieces[: args.pieces], mc.context_frames)
    Xt, Yt = corpus_arrays(pieces[args.pieces:], mc.context_frames)
    print(f"{len(X)} training pairs, {len(Xt)} held-out pairs")

    untrained = init_params(mc, make_rng(tc.seed), tc.init_gain)
    print(f"untrained ratio {invariance_ratio(untrained, Xt, Yt, mc.shift_range).ratio:.3f}")

    def report(step, p):
        if (step + 1) % args.every == 0:
            r = invariance_ratio(p, Xt, Yt, mc.shift_range)
            print(f"step {step + 1}: ratio {r.ratio:.3f} "
                  f"(shifted {r.median_shifted:.3f}, random {r.median_random:.3f})", flush=True)

    t0 = time.perf_counter()
    rep = train(X, Y, mc, tc, on_step=report)
    d = np.asarray(rep.data_loss)
    first, last = d[:100].mean(), d[-100:].mean()
    print(f"loss first100 {first:.3f} last100 {last:.3f} ratio {last / first:.3f} "
          f"({time.perf_counter() - t0:.0f}s)")
    if args.checkpoint:
        save_checkpoint(args.checkpoint, rep.params, mc)


if __name__ == "__main__":
    main()

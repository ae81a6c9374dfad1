"""Mapping-space against input-space k-NN interval classification on the
synthetic motif corpus, with every held-out pair randomly transposed.

    python scripts/knn_experiment.py --checkpoint model.ckpt
"""

import argparse

import numpy as np

from intervalgae.analysis import knn_cross_validate, label_matrix, predict_all_baseline
from intervalgae.formats import load_checkpoint, parse_run_config
from intervalgae.gae import mappings, shift
from intervalgae.synthetic import in_range_shifts, motif_corpus
from intervalgae.trainer import corpus_arrays, train


def transposed(X, Y, L, limit, rng):
    P = Y.shape[1]
    Xs, Ys = X.copy(), Y.copy()
    for n in range(X.shape[0]):
        ctx = X[n].reshape(L, P)
        opts = in_range_shifts(np.vstack([ctx, Y[n][None]]), limit)
        if opts.size:
            d = int(rng.choice(opts))
            Xs[n], Ys[n] = shift(ctx, d).reshape(-1), shift(Y[n], d)
    return Xs, Ys


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--checkpoint", help="use this model instead of training one")
    ap.add_argument("--pieces", type=int, default=200)
    ap.add_argument("--held-out", type=int, default=40)
    ap.add_argument("--corpus-seed", type=int, default=1)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--max-transpose", type=int, default=24)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    args = ap.parse_args()

    rc = parse_run_config(overrides=dict(kv.split("=", 1) for kv in args.set))
    pieces = motif_corpus(args.pieces + args.held_out, seed=args.corpus_seed)
    L = rc.model.context_frames
    if args.checkpoint:
        p, _ = load_checkpoint(args.checkpoint)
    else:
        X, Y = corpus_arrays(pieces[: args.pieces], L)
        p = train(X, Y, rc.model, rc.train).params
    Xh, Yh = corpus_arrays(pieces[args.pieces:], L)
    labels = label_matrix(Xh, Yh)
    Xt, Yt = transposed(Xh, Yh, L, args.max_transpose, np.random.default_rng(0))

    spaces = {
        "mapping": (mappings(p, Xh, Yh), mappings(p, Xt, Yt)),
        "input": (np.hstack([Xh, Yh]), np.hstack([Xt, Yt])),
    }
    for name, (pts, test) in spaces.items():
        r = knn_cross_validate(pts, labels, k=args.k, test_points=test)
        print(f"{name:8s} P={100 * r.precision:5.1f} R={100 * r.recall:5.1f} F1={100 * r.f1:5.1f}")
    b = predict_all_baseline(labels)
    print(f"{'all':8s} P={100 * b.precision:5.1f} R={100 * b.recall:5.1f} F1={100 * b.f1:5.1f}")


if __name__ == "__main__":
    main()

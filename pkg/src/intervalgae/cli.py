"""Command-line front end: ``intervalgae <command> ...``."""

from __future__ import annotations

import argparse
import dataclasses
import glob
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis, audio, discovery, formats, gae, symbolic, trainer
from .numerics import make_rng
from .synthetic import in_range_shifts

log = logging.getLogger("intervalgae")


class CliError(Exception):
    pass


# --- helpers -------------------------------------------------------------------

def _expand(patterns) -> list[Path]:
    out = []
    for pat in patterns:
        hits = sorted(glob.glob(pat))
        if not hits and not any(ch in pat for ch in "*?["):
            raise CliError(f"no such file: {pat}")
        out.extend(Path(h) for h in hits)
    if not out:
        raise CliError(f"no files match {' '.join(patterns)}")
    return out


def _load_piece(path) -> np.ndarray:
    try:
        return formats.read_container(path).astype(np.float64)
    except FileNotFoundError:
        raise CliError(f"no such file: {path}") from None
    except formats.FormatError as e:
        raise CliError(f"{path}: {e}") from None


def _load_ckpt(path):
    try:
        return formats.load_checkpoint(path)
    except FileNotFoundError:
        raise CliError(f"no such checkpoint: {path}") from None
    except formats.FormatError as e:
        raise CliError(f"{path}: {e}") from None


def _run_config(args) -> formats.RunConfig:
    text = ""
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text()
        except FileNotFoundError:
            raise CliError(f"no such config file: {args.config}") from None
    overrides = {}
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise CliError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    for key in formats.config_keys():
        v = getattr(args, key, None)
        if v is not None:
            overrides[key] = str(v)
    try:
        return formats.parse_run_config(text, overrides, audio=getattr(args, "audio", False))
    except (formats.FormatError, ValueError) as e:
        raise CliError(str(e)) from None


def _trajectory(p: gae.GaeParams, frames: np.ndarray) -> np.ndarray:
    L = p.context_frames
    if frames.shape[1] != p.input_dim:
        raise CliError(f"piece has {frames.shape[1]} columns, model expects {p.input_dim}")
    if frames.shape[0] < L + 1:
        raise CliError(f"piece has {frames.shape[0]} frames; need at least {L + 1}")
    X, Y = trainer.pair_arrays(frames, L)
    return gae.mappings(p, X, Y)


def _discovery_params(args, rc: formats.RunConfig | None = None):
    is_audio = bool(getattr(args, "audio", False))
    d = rc.discovery if rc is not None else formats.DiscoveryConfig()

    def pick(flag, cfg_val, sym, aud):
        if flag is not None:
            return flag
        if cfg_val is not None:
            return cfg_val
        return aud if is_audio else sym

    gamma = pick(args.gamma, d.gamma, discovery.GAMMA_SYMBOLIC, discovery.GAMMA_AUDIO)
    min_len = pick(args.min_len, d.min_len, discovery.MIN_LEN_SYMBOLIC, discovery.MIN_LEN_AUDIO)
    merge_tol = pick(args.merge_tol, d.merge_tol, discovery.MERGE_TOL_SYMBOLIC, discovery.MERGE_TOL_AUDIO)
    eps = pick(getattr(args, "ssm_eps", None), d.ssm_eps, discovery.SSM_EPS, discovery.SSM_EPS)
    return gamma, min_len, merge_tol, eps


def _labeled_pairs(paths, L):
    xs, ys = [], []
    for path in paths:
        X, Y = trainer.pair_arrays(_load_piece(path), L)
        xs.append(X)
        ys.append(Y)
    X, Y = np.concatenate(xs), np.concatenate(ys)
    if X.shape[0] == 0:
        raise CliError("no input/target pairs in the given data")
    return X, Y


def _transpose_pairs(X, Y, L, limit, rng):
    """Random in-range transposition of every pair (identity when none fits)."""
    P = Y.shape[1]
    Xs, Ys = X.copy(), Y.copy()
    for n in range(X.shape[0]):
        ctx = X[n].reshape(L, P)
        opts = in_range_shifts(np.vstack([ctx, Y[n][None]]), limit)
        if opts.size:
            d = int(rng.choice(opts))
            Xs[n] = gae.shift(ctx, d).reshape(-1)
            Ys[n] = gae.shift(Y[n], d)
    return Xs, Ys


# --- commands ----------------------------------------------------------------------

def cmd_ingest_midi(args) -> None:
    inputs = _expand(args.inputs)
    out = Path(args.out)
    many = len(inputs) > 1 or out.is_dir()
    if many:
        out.mkdir(parents=True, exist_ok=True)
    for path in inputs:
        try:
            notes, tpq = symbolic.read_notes(path)
            roll = symbolic.to_pianoroll(notes, tpq)
        except (ValueError, UnicodeDecodeError) as e:
            raise CliError(f"{path}: {e}") from None
        dest = out / (path.stem + ".timr") if many else out
        formats.write_container(dest, roll.frames, "u1")
        print(f"{path}\tnotes={len(notes)}\tdropped={roll.dropped_notes}\tframes={roll.n_frames}\t-> {dest}")


def cmd_ingest_audio(args) -> None:
    path = Path(args.input)
    try:
        spectro = audio.spectrogram_from_wav(path.read_bytes())
    except FileNotFoundError:
        raise CliError(f"no such file: {path}") from None
    except ValueError as e:
        raise CliError(f"{path}: {e}") from None
    formats.write_container(args.out, spectro.frames, "f4")
    print(f"{path}\tframes={spectro.frames.shape[0]}\tbins={spectro.frames.shape[1]}\t-> {args.out}")


def cmd_train(args) -> None:
    rc = _run_config(args)
    mc, tc = rc.model, rc.train
    paths = _expand(args.data)
    pieces = [_load_piece(p) for p in paths]
    for path, piece in zip(paths, pieces):
        if piece.shape[1] != mc.input_dim:
            raise CliError(f"{path}: {piece.shape[1]} columns but input_dim={mc.input_dim}")
    X, Y = trainer.corpus_arrays(pieces, mc.context_frames)
    if X.shape[0] == 0:
        raise CliError("no training pairs: every piece is shorter than context_frames + 1")
    out = Path(args.out)
    every = args.checkpoint_every

    def on_step(step, p):
        if every and (step + 1) % every == 0 and step + 1 < tc.total_steps:
            formats.save_checkpoint(out.with_name(f"{out.stem}.step{step + 1}{out.suffix}"), p, mc)

    try:
        report = trainer.train(X, Y, mc, tc, on_step=on_step)
    except trainer.TrainingDiverged as e:
        raise CliError(str(e)) from None
    formats.save_checkpoint(out, report.params, mc)
    trace = Path(args.trace) if args.trace else out.with_suffix(".trace.csv")
    formats.write_csv(trace, ["step", "lr", "data_loss", "reg_loss"], report.trace_rows())
    if args.save_config:
        Path(args.save_config).write_text(formats.format_run_config(rc))
    last = float(np.mean(report.data_loss[-100:])) if report.data_loss else float("nan")
    print(f"pairs={X.shape[0]}\tsteps={report.steps}\tfinal_loss={last:.4f}\t"
          f"time={report.wall_clock:.1f}s\t-> {out}")


def cmd_map(args) -> None:
    p, _ = _load_ckpt(args.checkpoint)
    M = _trajectory(p, _load_piece(args.piece))
    formats.write_container(args.out, M, "f8")
    print(f"{args.piece}\trows={M.shape[0]}\tdim={M.shape[1]}\t-> {args.out}")


def cmd_ssm(args) -> None:
    p, cfg = _load_ckpt(args.checkpoint)
    _, _, _, eps = _discovery_params(args)
    S = discovery.build_ssm(_trajectory(p, _load_piece(args.piece)), eps=eps, context_frames=cfg.context_frames)
    formats.write_container(args.out, S.X, "f8")
    if args.pgm:
        Path(args.pgm).write_text(formats.encode_pgm(S.X))
    print(f"{args.piece}\tsize={S.size}\tdegenerate={S.degenerate}\t-> {args.out}")


def discover(p: gae.GaeParams, frames: np.ndarray, gamma: float, min_len: int, merge_tol: int,
             eps: float = discovery.SSM_EPS):
    """Mapping trajectory -> SSM -> diagonals -> groups (in piece frames)."""
    M = _trajectory(p, frames)
    S = discovery.build_ssm(M, eps=eps, context_frames=p.context_frames)
    hits = discovery.trace_diagonals(S, gamma)
    groups = discovery.extract_groups(hits, min_len, merge_tol)
    return S, hits, discovery.rows_to_frames(groups, p.context_frames)


def cmd_discover(args) -> None:
    rc = _run_config(args) if args.config else None
    p, _ = _load_ckpt(args.checkpoint)
    gamma, min_len, merge_tol, eps = _discovery_params(args, rc)
    S, hits, groups = discover(p, _load_piece(args.piece), gamma, min_len, merge_tol, eps)
    seconds = (audio.SAMPLE_RATE, audio.CqtConfig().hop) if args.audio and args.seconds else None
    text = formats.format_sections(groups, seconds)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.pgm:
        Path(args.pgm).write_text(formats.encode_pgm(S.X))
    log.info("gamma=%g min_len=%d merge_tol=%d hits=%d groups=%d", gamma, min_len, merge_tol, len(hits), len(groups))
    if args.out:
        print(f"{args.piece}\thits={len(hits)}\tgroups={len(groups)}\t-> {args.out}")


def cmd_eval_knn(args) -> None:
    p, cfg = _load_ckpt(args.checkpoint)
    L = cfg.context_frames
    X, Y = _labeled_pairs(_expand(args.data), L)
    labels = analysis.label_matrix(X, Y)
    rng = make_rng(args.seed)
    Xt, Yt = _transpose_pairs(X, Y, L, args.max_transpose, rng) if args.transpose else (X, Y)
    rows = []
    spaces = {
        "mapping": (gae.mappings(p, X, Y), gae.mappings(p, Xt, Yt)),
        "input": (np.hstack([X, Y]), np.hstack([Xt, Yt])),
    }
    for name in (["mapping", "input"] if args.space == "both" else [args.space]):
        train_pts, test_pts = spaces[name]
        rep = analysis.knn_cross_validate(train_pts, labels, k=args.k, folds=args.folds, seed=args.seed,
                                          test_points=test_pts)
        rows.append([name, "all", rep.precision, rep.recall, rep.f1, rep.n_scored, rep.n_empty])
        for f, r in enumerate(rep.folds):
            rows.append([name, f, r.precision, r.recall, r.f1, r.n_scored, r.n_empty])
        print(f"{name}\tP={rep.precision:.4f}\tR={rep.recall:.4f}\tF1={rep.f1:.4f}")
    base = analysis.predict_all_baseline(labels)
    rows.append(["all-baseline", "all", base.precision, base.recall, base.f1, base.n_scored, base.n_empty])
    formats.write_csv(args.out, ["space", "fold", "precision", "recall", "f1", "n_scored", "n_empty"], rows)


def cmd_cluster_matrix(args) -> None:
    p, cfg = _load_ckpt(args.checkpoint)
    X, Y = _labeled_pairs(_expand(args.data), cfg.context_frames)
    cm = analysis.cluster_distance_matrix(gae.mappings(p, X, Y), analysis.label_matrix(X, Y))
    header = ["interval"] + [str(int(i)) for i in cm.intervals]
    rows = ([int(i)] + [("" if np.isnan(v) else float(v)) for v in row] for i, row in zip(cm.intervals, cm.D))
    formats.write_csv(args.out, header, rows)
    if args.pgm:
        Path(args.pgm).write_text(formats.encode_pgm(cm.D, invert=True))
    print(f"labels={len(cm.intervals)}\tmissing={int(cm.missing.sum())}\t-> {args.out}")


def cmd_sensitivity(args) -> None:
    p, cfg = _load_ckpt(args.checkpoint)
    X, Y = _labeled_pairs(_expand(args.data), cfg.context_frames)
    prof = analysis.sensitivity(p, X, Y, cfg.output_kind)
    L = cfg.context_frames
    formats.write_csv(args.out, ["lag", "frame", "sensitivity"],
                      ([i - (L - 1), i, float(v)] for i, v in enumerate(prof)))
    print("\t".join(f"{v:.4g}" for v in prof))


def cmd_eval_sections(args) -> None:
    try:
        found = formats.parse_sections(Path(args.found).read_text())
        truth = formats.parse_sections(Path(args.truth).read_text())
    except FileNotFoundError as e:
        raise CliError(f"no such file: {e.filename}") from None
    s = discovery.evaluate_sections(found, truth)
    print(f"P={s.precision:.4f}\tR={s.recall:.4f}\tF1={s.f1:.4f}")
    if args.out:
        formats.write_csv(args.out, ["precision", "recall", "f1", "matched", "found", "truth"],
                          [[s.precision, s.recall, s.f1, s.matched, len(found), len(truth)]])


# --- parser -----------------------------------------------------------------------

def _add_config_flags(sp) -> None:
    sp.add_argument("--config", help="key=value run config file")
    sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    for cls in formats.SECTIONS:
        if cls is formats.DiscoveryConfig:
            continue
        for f in dataclasses.fields(cls):
            flag = "--" + f.name.replace("_", "-")
            if flag == "--seed":
                continue
            sp.add_argument(flag, dest=f.name, default=None, help=argparse.SUPPRESS)
    sp.add_argument("--seed", dest="seed", type=int, default=None, help="random seed")


def _add_discovery_flags(sp) -> None:
    sp.add_argument("--audio", action="store_true", help="audio defaults (gamma 0.81, min-len 36, merge-tol 9)")
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--min-len", dest="min_len", type=int, default=None)
    sp.add_argument("--merge-tol", dest="merge_tol", type=int, default=None)
    sp.add_argument("--ssm-eps", dest="ssm_eps", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="intervalgae", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ingest-midi", help="MIDI / note-list files to piano-roll containers")
    sp.add_argument("inputs", nargs="+")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_ingest_midi)

    sp = sub.add_parser("ingest-audio", help="WAV to contrast-normalized CQT container")
    sp.add_argument("input")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_ingest_audio)

    sp = sub.add_parser("train", help="train a model on piece containers")
    sp.add_argument("data", nargs="+", help="container files or globs")
    sp.add_argument("--out", required=True, help="checkpoint path")
    sp.add_argument("--trace", help="trace CSV (default: <out>.trace.csv)")
    sp.add_argument("--checkpoint-every", type=int, default=0)
    sp.add_argument("--save-config", help="write the effective config here")
    sp.add_argument("--audio", action="store_true", help="audio model defaults")
    _add_config_flags(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("map", help="mapping trajectory of one piece")
    sp.add_argument("checkpoint")
    sp.add_argument("piece")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_map)

    sp = sub.add_parser("ssm", help="self-similarity matrix of one piece")
    sp.add_argument("checkpoint")
    sp.add_argument("piece")
    sp.add_argument("--out", required=True)
    sp.add_argument("--pgm")
    _add_discovery_flags(sp)
    sp.set_defaults(func=cmd_ssm)

    sp = sub.add_parser("discover", help="repeated sections of one piece")
    sp.add_argument("checkpoint")
    sp.add_argument("piece")
    sp.add_argument("--out", help="sections file (default: stdout)")
    sp.add_argument("--pgm", help="also write the SSM as PGM")
    sp.add_argument("--seconds", action="store_true", help="with --audio, write sections in seconds")
    sp.add_argument("--config")
    _add_discovery_flags(sp)
    sp.set_defaults(func=cmd_discover)

    sp = sub.add_parser("eval-knn", help="k-NN interval classification report")
    sp.add_argument("checkpoint")
    sp.add_argument("data", nargs="+")
    sp.add_argument("--out", required=True)
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--folds", type=int, default=10)
    sp.add_argument("--space", choices=["mapping", "input", "both"], default="both")
    sp.add_argument("--transpose", action="store_true", help="randomly transpose the held-out folds")
    sp.add_argument("--max-transpose", type=int, default=24)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_eval_knn)

    sp = sub.add_parser("cluster-matrix", help="interval cluster-centre distance matrix")
    sp.add_argument("checkpoint")
    sp.add_argument("data", nargs="+")
    sp.add_argument("--out", required=True)
    sp.add_argument("--pgm")
    sp.set_defaults(func=cmd_cluster_matrix)

    sp = sub.add_parser("sensitivity", help="context sensitivity profile")
    sp.add_argument("checkpoint")
    sp.add_argument("data", nargs="+")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_sensitivity)

    sp = sub.add_parser("eval-sections", help="score found sections against ground truth")
    sp.add_argument("found")
    sp.add_argument("truth")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_eval_sections)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError, trainer.TrainingDiverged) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

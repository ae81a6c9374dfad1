import numpy as np
import pytest

from intervalgae import cli
from intervalgae.audio import AudioBuffer, write_wav
from intervalgae.discovery import PatternGroup, SectionOccurrence
from intervalgae.formats import (
    format_sections, load_checkpoint, read_container, read_csv, write_container,
)
from intervalgae.symbolic import NoteEvent, format_notelist

TINY = ["--factor-dim", "16", "--map-dim-1", "8", "--map-dim-2", "4", "--total-steps", "20", "--batch-size", "8"]


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def piece(tmp_path):
    rng = np.random.default_rng(0)
    notes = [NoteEvent(4 * i, 4, int(p)) for i, p in enumerate(rng.integers(50, 80, size=30))]
    src = tmp_path / "piece.txt"
    src.write_text(format_notelist(notes, 4))
    roll = tmp_path / "piece.timr"
    assert run("ingest-midi", src, "--out", roll) == 0
    return roll


@pytest.fixture
def model(tmp_path, piece):
    ckpt = tmp_path / "m.ckpt"
    assert run("train", piece, "--out", ckpt, *TINY, "--save-config", tmp_path / "run.cfg") == 0
    return ckpt


def test_ingest_audio_shape(tmp_path):
    t = np.arange(10 * 44100) / 44100
    wav = tmp_path / "a.wav"
    wav.write_bytes(write_wav(AudioBuffer(0.2 * np.sin(2 * np.pi * 330 * t), 44100)))
    assert run("ingest-audio", wav, "--out", tmp_path / "a.timr") == 0
    M = read_container(tmp_path / "a.timr")
    assert M.shape == (111, 120) and M.dtype == np.float32


def test_missing_inputs_exit_nonzero(tmp_path, capsys):
    assert run("ingest-audio", tmp_path / "nope.wav", "--out", tmp_path / "x") == 1
    assert run("ingest-midi", tmp_path / "nope.mid", "--out", tmp_path / "x") == 1
    assert run("map", tmp_path / "nope.ckpt", tmp_path / "x", "--out", tmp_path / "y") == 1
    assert "no such" in capsys.readouterr().err


def test_ingest_midi_roll(piece):
    R = read_container(piece)
    assert R.dtype == np.uint8 and R.shape == (120, 60) and R.sum(axis=1).max() == 1


def test_train_outputs(tmp_path, piece, model):
    p, cfg = load_checkpoint(model)
    assert cfg.factor_dim == 16 and p.U.shape == (16, 9 * 60)
    trace = read_csv(model.with_suffix(".trace.csv"))
    assert len(trace) == 20 and set(trace[0]) == {"step", "lr", "data_loss", "reg_loss"}
    assert "factor_dim=16" in (tmp_path / "run.cfg").read_text()


def test_bad_config_is_reported(tmp_path, piece, capsys):
    assert run("train", piece, "--out", tmp_path / "m.ckpt", "--set", "no_such_key=1") == 1
    assert "unknown" in capsys.readouterr().err
    assert run("train", piece, "--out", tmp_path / "m.ckpt", "--set", "dropout_p=2") == 1


def test_map_ssm_and_discover(tmp_path, piece, model, capsys):
    assert run("map", model, piece, "--out", tmp_path / "traj.timr") == 0
    assert read_container(tmp_path / "traj.timr").shape == (111, 4)
    assert run("ssm", model, piece, "--out", tmp_path / "ssm.timr", "--pgm", tmp_path / "ssm.pgm") == 0
    S = read_container(tmp_path / "ssm.timr")
    assert S.shape == (111, 111) and np.allclose(S, S.T)
    assert (tmp_path / "ssm.pgm").read_text().startswith("P2\n111 111\n")
    capsys.readouterr()
    assert run("discover", model, piece, "--gamma", "0.5", "--min-len", "4") == 0
    out = capsys.readouterr().out
    for line in out.splitlines():
        assert all(":" in tok for tok in line.split()[1:])


def test_analysis_commands(tmp_path, piece, model):
    assert run("eval-knn", model, piece, "--out", tmp_path / "knn.csv", "--k", "3", "--folds", "3",
               "--transpose") == 0
    rows = read_csv(tmp_path / "knn.csv")
    assert {r["space"] for r in rows} == {"mapping", "input", "all-baseline"}
    assert run("cluster-matrix", model, piece, "--out", tmp_path / "cm.csv") == 0
    assert len(read_csv(tmp_path / "cm.csv")) == 49
    assert run("sensitivity", model, piece, "--out", tmp_path / "s.csv") == 0
    rows = read_csv(tmp_path / "s.csv")
    assert [int(r["lag"]) for r in rows] == list(range(-8, 1))


def test_eval_sections(tmp_path, capsys):
    g = [PatternGroup([SectionOccurrence(0, 40), SectionOccurrence(100, 140)])]
    (tmp_path / "f.txt").write_text(format_sections(g))
    assert run("eval-sections", tmp_path / "f.txt", tmp_path / "f.txt") == 0
    assert "F1=1.0000" in capsys.readouterr().out
    assert run("eval-sections", tmp_path / "f.txt", tmp_path / "missing.txt") == 1


def test_wrong_width_piece(tmp_path, model):
    write_container(tmp_path / "wide.timr", np.zeros((30, 120), np.uint8))
    assert run("map", model, tmp_path / "wide.timr", "--out", tmp_path / "o") == 1

import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from intervalgae.symbolic import (
    MidiParseError, NoteEvent, format_notelist, parse_midi, parse_notelist, read_notes,
    to_pianoroll, write_midi,
)


def smf(tracks, fmt=None, division=480):
    fmt = (0 if len(tracks) == 1 else 1) if fmt is None else fmt
    out = b"MThd" + struct.pack(">IHHH", 6, fmt, len(tracks), division)
    for body in tracks:
        out += b"MTrk" + struct.pack(">I", len(body)) + body
    return out


END = b"\x00\xff\x2f\x00"


def test_single_quarter_note():
    data = smf([b"\x00\x90\x3c\x40" + b"\x83\x60\x80\x3c\x00" + END])
    assert parse_midi(data) == ([NoteEvent(0, 480, 60)], 480)


def test_empty_track():
    assert parse_midi(smf([END])) == ([], 480)


def test_two_voices_share_onset():
    body = b"\x00\x90\x3c\x40\x00\x90\x40\x40\x83\x60\x80\x3c\x00\x00\x80\x40\x00" + END
    notes, _ = parse_midi(smf([body]))
    assert [n.pitch for n in notes] == [60, 64]
    assert notes[0].onset == notes[1].onset == 0


def test_running_status_and_velocity_zero():
    # note-on 60, then running-status note-on 60 vel 0 closes it
    body = b"\x00\x90\x3c\x40\x60\x3c\x00" + END
    assert parse_midi(smf([body]))[0] == [NoteEvent(0, 96, 60)]


def test_same_pitch_overlap_closes_fifo():
    body = b"\x00\x90\x3c\x40\x10\x90\x3c\x40\x10\x80\x3c\x00\x10\x80\x3c\x00" + END
    notes, _ = parse_midi(smf([body]))
    assert notes == [NoteEvent(0, 32, 60), NoteEvent(16, 32, 60)]


def test_meta_and_format_one():
    tempo = b"\x00\xff\x51\x03\x07\xa1\x20"
    t1 = tempo + END
    t2 = b"\x00\x90\x48\x40\x81\x00\x80\x48\x00" + END
    notes, tpq = parse_midi(smf([t1, t2], division=96))
    assert tpq == 96 and notes == [NoteEvent(0, 128, 72)]


@pytest.mark.parametrize("data, msg", [
    (b"RIFF" + bytes(10), "MThd"),
    (smf([END], division=0xE728), "SMPTE"),
    (smf([END], fmt=2), "format"),
    (smf([END])[:-2], "past end"),
    (smf([b"\x00\x3c\x40" + END]), "running status"),
])
def test_malformed_files(data, msg):
    with pytest.raises(MidiParseError, match=msg) as err:
        parse_midi(data)
    assert "offset" in str(err.value)


def test_write_then_parse_roundtrip():
    notes = [NoteEvent(0, 240, 60), NoteEvent(0, 480, 64), NoteEvent(480, 120, 67)]
    assert parse_midi(write_midi(notes, 480)) == (sorted(notes, key=lambda n: (n.onset, n.pitch)), 480)


def test_notelist_roundtrip_and_errors(tmp_path):
    notes = [NoteEvent(0, 4, 60), NoteEvent(4, 2, 62)]
    text = "# a comment\n" + format_notelist(notes, 4)
    assert parse_notelist(text) == (notes, 4)
    path = tmp_path / "a.txt"
    path.write_text(text)
    assert read_notes(path) == (notes, 4)
    midi = tmp_path / "a.mid"
    midi.write_bytes(write_midi(notes, 4))
    assert read_notes(midi) == (notes, 4)
    with pytest.raises(ValueError, match="ppq"):
        parse_notelist("0 4 60\n")
    with pytest.raises(ValueError, match="line 2"):
        parse_notelist("ppq 4\n0 4\n")


def test_note_event_validation():
    with pytest.raises(ValueError):
        NoteEvent(0, 0, 60)
    with pytest.raises(ValueError):
        NoteEvent(-1, 1, 60)
    assert NoteEvent(0, 1, 60).transposed(5).pitch == 65


def test_quarter_note_roll():
    roll = to_pianoroll([NoteEvent(0, 480, 60)], 480)
    assert roll.frames.shape == (4, 60)
    assert np.array_equal(np.flatnonzero(roll.frames.any(axis=0)), [24])
    assert roll.frames[:, 24].tolist() == [1, 1, 1, 1]


def test_chord_sixteenth():
    roll = to_pianoroll([NoteEvent(0, 120, p) for p in (60, 64, 67)], 480)
    assert roll.frames.shape == (1, 60)
    assert np.flatnonzero(roll.frames[0]).tolist() == [24, 28, 31]


def test_out_of_range():
    with pytest.raises(ValueError, match="outside"):
        to_pianoroll([NoteEvent(0, 120, 20)], 480)
    roll = to_pianoroll([NoteEvent(0, 120, 20), NoteEvent(0, 120, 96), NoteEvent(0, 120, 95)], 480)
    assert roll.dropped_notes == 2 and roll.frames[0, 59] == 1


def test_off_grid_note_touches_every_frame_it_overlaps():
    # ticks 100..259 at 120 ticks per frame: frames 0, 1, 2
    roll = to_pianoroll([NoteEvent(100, 160, 60)], 480)
    assert roll.frames[:, 24].tolist() == [1, 1, 1]


notes_strategy = st.lists(
    st.builds(NoteEvent, st.integers(0, 400), st.integers(1, 200), st.integers(30, 100)),
    min_size=1, max_size=12,
).filter(lambda ns: any(36 <= n.pitch <= 95 for n in ns))


def brute_force_roll(notes, tpq):
    w = tpq // 4
    inr = [n for n in notes if 36 <= n.pitch <= 95]
    T = -(-max(n.onset + n.duration for n in inr) // w)
    out = np.zeros((T, 60), dtype=np.uint8)
    for f in range(T):
        for tick in range(f * w, (f + 1) * w):
            for n in inr:
                if n.onset <= tick < n.onset + n.duration:
                    out[f, n.pitch - 36] = 1
    return out


@settings(max_examples=40, deadline=None)
@given(notes_strategy)
def test_roll_matches_per_tick_oracle(notes):
    assert np.array_equal(to_pianoroll(notes, 24).frames, brute_force_roll(notes, 24))


@given(notes_strategy, st.randoms())
def test_roll_ignores_note_order(notes, rnd):
    shuffled = list(notes)
    rnd.shuffle(shuffled)
    assert np.array_equal(to_pianoroll(notes, 24).frames, to_pianoroll(shuffled, 24).frames)


@given(st.lists(st.builds(NoteEvent, st.integers(0, 200), st.integers(1, 100), st.integers(40, 80)),
                min_size=1, max_size=10), st.integers(-4, 15))
def test_transposition_permutes_rows(notes, k):
    a = to_pianoroll(notes, 24).frames
    b = to_pianoroll([n.transposed(k) for n in notes], 24).frames
    assert np.array_equal(np.roll(a, k, axis=1), b)

"""Symbolic input: a minimal Standard MIDI File reader, a plain-text note list
reader, and conversion to a 60-row binary piano roll on a sixteenth-note grid.
"""

from __future__ import annotations

import logging
import struct
from collections import defaultdict, deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

PITCH_BASE = 36
N_PITCHES = 60
FRAMES_PER_WHOLE = 16


class MidiParseError(ValueError):
    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} (at byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class NoteEvent:
    onset: int
    duration: int
    pitch: int

    def __post_init__(self):
        if self.onset < 0:
            raise ValueError("onset must be non-negative")
        if self.duration < 1:
            raise ValueError("duration must be at least one tick")
        if not 0 <= self.pitch <= 127:
            raise ValueError(f"pitch {self.pitch} outside 0..127")

    def transposed(self, k: int) -> "NoteEvent":
        return NoteEvent(self.onset, self.duration, self.pitch + k)


@dataclass
class PianoRoll:
    frames: np.ndarray  # T x 60, uint8 in {0, 1}
    frames_per_whole_note: int = FRAMES_PER_WHOLE
    pitch_base: int = PITCH_BASE
    dropped_notes: int = 0

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


# --- Standard MIDI File ------------------------------------------------------

def _read_varlen(data: bytes, pos: int, end: int) -> tuple[int, int]:
    value = 0
    for _ in range(4):
        if pos >= end:
            raise MidiParseError("truncated variable-length quantity", pos)
        b = data[pos]
        pos += 1
        value = (value << 7) | (b & 0x7F)
        if not b & 0x80:
            return value, pos
    raise MidiParseError("variable-length quantity longer than 4 bytes", pos)


def parse_midi(data: bytes) -> tuple[list[NoteEvent], int]:
    """Notes of an SMF (format 0 or 1) and its ticks-per-quarter resolution.

    Velocity-0 note-ons close notes; overlapping notes of the same pitch on
    the same channel are closed first-in-first-out. Tempo is ignored.
    """
    if len(data) < 14 or data[:4] != b"MThd":
        raise MidiParseError("missing MThd header", 0)
    hlen = struct.unpack(">I", data[4:8])[0]
    if hlen < 6 or 8 + hlen > len(data):
        raise MidiParseError("bad header length", 4)
    fmt, ntracks, division = struct.unpack(">HHH", data[8:14])
    if fmt not in (0, 1):
        raise MidiParseError(f"unsupported SMF format {fmt}", 8)
    if division & 0x8000:
        raise MidiParseError("SMPTE time division is not supported", 12)
    tpq = division
    if tpq == 0:
        raise MidiParseError("zero ticks per quarter", 12)

    notes: list[NoteEvent] = []
    pos = 8 + hlen
    for _ in range(ntracks):
        if pos + 8 > len(data):
            raise MidiParseError("truncated track header", pos)
        if data[pos:pos + 4] != b"MTrk":
            raise MidiParseError(f"expected MTrk chunk, found {data[pos:pos + 4]!r}", pos)
        tlen = struct.unpack(">I", data[pos + 4:pos + 8])[0]
        start, end = pos + 8, pos + 8 + tlen
        if end > len(data):
            raise MidiParseError("track chunk runs past end of file", pos + 4)
        notes.extend(_parse_track(data, start, end))
        pos = end
    notes.sort(key=lambda n: (n.onset, n.pitch, n.duration))
    return notes, tpq


def _parse_track(data: bytes, pos: int, end: int) -> list[NoteEvent]:
    tick = 0
    status = None
    open_notes: dict[tuple[int, int], deque] = defaultdict(deque)
    out = []

    def close(ch, pitch, at):
        q = open_notes[(ch, pitch)]
        if q:
            onset = q.popleft()
            if at > onset:
                out.append(NoteEvent(onset, at - onset, pitch))

    while pos < end:
        delta, pos = _read_varlen(data, pos, end)
        tick += delta
        if pos >= end:
            raise MidiParseError("truncated event", pos)
        b = data[pos]
        if b == 0xFF:
            if pos + 2 > end:
                raise MidiParseError("truncated meta event", pos)
            mtype = data[pos + 1]
            length, p2 = _read_varlen(data, pos + 2, end)
            pos = p2 + length
            if pos > end:
                raise MidiParseError("meta event runs past end of track", p2)
            if mtype == 0x2F:
                break
            continue
        if b in (0xF0, 0xF7):
            length, p2 = _read_varlen(data, pos + 1, end)
            pos = p2 + length
            if pos > end:
                raise MidiParseError("sysex runs past end of track", p2)
            continue
        if b & 0x80:
            status = b
            pos += 1
        elif status is None:
            raise MidiParseError("running status without a previous status byte", pos)
        kind = status & 0xF0
        ch = status & 0x0F
        nbytes = 1 if kind in (0xC0, 0xD0) else 2
        if pos + nbytes > end:
            raise MidiParseError("truncated channel event", pos)
        args = data[pos:pos + nbytes]
        pos += nbytes
        if kind == 0x90 and args[1] > 0:
            open_notes[(ch, args[0])].append(tick)
        elif kind == 0x80 or (kind == 0x90 and args[1] == 0):
            close(ch, args[0], tick)
    for (ch, pitch), q in open_notes.items():
        while q:
            log.warning("note %d on channel %d never closed; ending it at track end", pitch, ch)
            close(ch, pitch, tick)
    return out


def write_midi(notes: list[NoteEvent], tpq: int = 480) -> bytes:
    """Single-track format-0 file; used to build fixtures."""
    events = []
    for n in notes:
        events.append((n.onset, 1, bytes([0x90, n.pitch, 64])))
        events.append((n.onset + n.duration, 0, bytes([0x80, n.pitch, 0])))
    events.sort(key=lambda e: (e[0], e[1]))
    body = bytearray()
    last = 0
    for tick, _, msg in events:
        body += _varlen(tick - last) + msg
        last = tick
    body += b"\x00\xff\x2f\x00"
    header = b"MThd" + struct.pack(">IHHH", 6, 0, 1, tpq)
    return header + b"MTrk" + struct.pack(">I", len(body)) + bytes(body)


def _varlen(v: int) -> bytes:
    out = [v & 0x7F]
    v >>= 7
    while v:
        out.append((v & 0x7F) | 0x80)
        v >>= 7
    return bytes(reversed(out))


# --- note-list text ----------------------------------------------------------

def parse_notelist(text: str) -> tuple[list[NoteEvent], int]:
    """``ppq N`` header line, then one ``onset duration pitch`` triple per line.

    ``#`` starts a comment; blank lines are ignored.
    """
    tpq = None
    notes = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0].lower() == "ppq":
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'ppq <ticks>'")
            tpq = int(parts[1])
            continue
        if tpq is None:
            raise ValueError(f"line {lineno}: note before the 'ppq' header")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'onset duration pitch', got {line!r}")
        try:
            notes.append(NoteEvent(*(int(p) for p in parts)))
        except ValueError as e:
            raise ValueError(f"line {lineno}: {e}") from None
    if tpq is None or tpq <= 0:
        raise ValueError("missing or invalid 'ppq' header")
    return notes, tpq


def format_notelist(notes: list[NoteEvent], tpq: int) -> str:
    lines = [f"ppq {tpq}"]
    lines += [f"{n.onset} {n.duration} {n.pitch}" for n in notes]
    return "\n".join(lines) + "\n"


def read_notes(path: str | Path) -> tuple[list[NoteEvent], int]:
    """Dispatch on content: SMF if it starts with ``MThd``, note list otherwise."""
    data = Path(path).read_bytes()
    if data[:4] == b"MThd":
        return parse_midi(data)
    return parse_notelist(data.decode("utf-8"))


# --- piano roll --------------------------------------------------------------

def to_pianoroll(notes: list[NoteEvent], ticks_per_quarter: int,
                 frames_per_whole_note: int = FRAMES_PER_WHOLE) -> PianoRoll:
    """Binary roll where frame f covers ticks [f*w, (f+1)*w), w = 4*tpq/frames_per_whole_note.

    A pitch is on in every frame its tick interval intersects. Pitches outside
    36..95 are dropped (and counted).
    """
    if not notes:
        raise ValueError("no notes to convert")
    ticks_per_frame = 4 * ticks_per_quarter / frames_per_whole_note
    keep = [n for n in notes if PITCH_BASE <= n.pitch < PITCH_BASE + N_PITCHES]
    dropped = len(notes) - len(keep)
    if dropped:
        log.warning("%d notes outside MIDI %d..%d dropped", dropped, PITCH_BASE, PITCH_BASE + N_PITCHES - 1)
    if not keep:
        raise ValueError("all notes fall outside the representable pitch range")
    last_tick = max(n.onset + n.duration for n in keep)
    T = int(np.ceil(last_tick / ticks_per_frame))
    roll = np.zeros((T, N_PITCHES), dtype=np.uint8)
    for n in keep:
        first = int(n.onset // ticks_per_frame)
        # last tick sounding is onset + duration - 1
        last = int((n.onset + n.duration - 1) // ticks_per_frame)
        roll[first:last + 1, n.pitch - PITCH_BASE] = 1
    return PianoRoll(roll, frames_per_whole_note, PITCH_BASE, dropped)

"""On-disk formats: the TIMR matrix container, model checkpoints, run
configs, plain PGM images, CSV reports and section lists."""

from __future__ import annotations

import csv
import dataclasses
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .discovery import PatternGroup, SectionOccurrence
from .gae import GaeParams, ModelConfig
from .trainer import TrainConfig

MAGIC = b"TIMR"
VERSION = 1
_HEADER = struct.Struct("<4sHBII")
DTYPES = {0: np.dtype("u1"), 1: np.dtype("<f4"), 2: np.dtype("<f8")}
DTYPE_CODES = {"u1": 0, "f4": 1, "f8": 2}


class FormatError(ValueError):
    pass


# --- container ---------------------------------------------------------------

def encode_container(M: np.ndarray, dtype: str | None = None) -> bytes:
    """Header (magic, u16 version, u8 dtype, u32 rows, u32 cols) + row-major
    little-endian payload. ``dtype`` is 'u1', 'f4' or 'f8'; by default uint8
    arrays stay bytes and everything else is stored as float64."""
    M = np.asarray(M)
    if M.ndim == 1:
        M = M[None, :]
    if M.ndim != 2:
        raise FormatError(f"containers hold 2-d matrices, got shape {M.shape}")
    if dtype is None:
        dtype = "u1" if M.dtype == np.uint8 or M.dtype == np.bool_ else "f8"
    code = DTYPE_CODES[dtype]
    if code != 0 and not np.all(np.isfinite(M)):
        raise FormatError("refusing to store non-finite values")
    if code == 0 and (M.min(initial=0) < 0 or M.max(initial=0) > 255):
        raise FormatError("byte containers need values in 0..255")
    payload = np.ascontiguousarray(M, dtype=DTYPES[code]).tobytes()
    return _HEADER.pack(MAGIC, VERSION, code, M.shape[0], M.shape[1]) + payload


def decode_container(data: bytes, offset: int = 0) -> tuple[np.ndarray, int]:
    """Matrix stored at ``offset`` and the offset just past it."""
    if len(data) - offset < _HEADER.size:
        raise FormatError("truncated container header")
    magic, version, code, rows, cols = _HEADER.unpack_from(data, offset)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}")
    if code not in DTYPES:
        raise FormatError(f"unknown dtype flag {code}")
    dt = DTYPES[code]
    start = offset + _HEADER.size
    end = start + rows * cols * dt.itemsize
    if end > len(data):
        raise FormatError("truncated container payload")
    M = np.frombuffer(data[start:end], dtype=dt).reshape(rows, cols).copy()
    return M, end


def write_container(path: str | Path, M: np.ndarray, dtype: str | None = None) -> None:
    Path(path).write_bytes(encode_container(M, dtype))


def read_container(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    M, end = decode_container(data)
    if end != len(data):
        raise FormatError(f"{path}: {len(data) - end} trailing bytes after container")
    return M


# --- checkpoints -------------------------------------------------------------

CKPT_MAGIC = "GAE-CHECKPOINT"
CKPT_VERSION = 1


def encode_checkpoint(p: GaeParams, cfg: ModelConfig) -> bytes:
    p.check_config(cfg)
    lines = [f"{CKPT_MAGIC} {CKPT_VERSION}"]
    lines += [f"{k}={v}" for k, v in cfg.as_dict().items()]
    lines.append("end")
    head = ("\n".join(lines) + "\n").encode("ascii")
    return head + b"".join(encode_container(a, "f8") for a in p.arrays())


def decode_checkpoint(data: bytes) -> tuple[GaeParams, ModelConfig]:
    marker = b"\nend\n"
    cut = data.find(marker)
    if cut < 0:
        raise FormatError("checkpoint header is not terminated")
    lines = data[:cut].decode("ascii").split("\n")
    first = lines[0].split()
    if len(first) != 2 or first[0] != CKPT_MAGIC:
        raise FormatError("not a checkpoint file")
    if int(first[1]) != CKPT_VERSION:
        raise FormatError(f"unsupported checkpoint version {first[1]}")
    cfg = _build_dataclass(ModelConfig, dict(_parse_kv(lines[1:], "checkpoint header")))
    pos = cut + len(marker)
    arrays = []
    for _ in range(4):
        M, pos = decode_container(data, pos)
        arrays.append(M.astype(np.float64))
    if pos != len(data):
        raise FormatError("trailing bytes after checkpoint matrices")
    p = GaeParams(*arrays)
    p.check_config(cfg)
    return p, cfg


def save_checkpoint(path: str | Path, p: GaeParams, cfg: ModelConfig) -> None:
    Path(path).write_bytes(encode_checkpoint(p, cfg))


def load_checkpoint(path: str | Path) -> tuple[GaeParams, ModelConfig]:
    return decode_checkpoint(Path(path).read_bytes())


# --- key=value configs ---------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class DiscoveryConfig:
    gamma: float | None = None
    min_len: int | None = None
    merge_tol: int | None = None
    ssm_eps: float | None = None


def _parse_kv(lines: Iterable[str], where: str) -> Iterable[tuple[str, str]]:
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{where} line {n}: expected key=value, got {raw!r}")
        k, v = line.split("=", 1)
        yield k.strip(), v.strip()


def _coerce(value: str, default):
    if isinstance(default, bool):
        return value.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    if default is None:
        try:
            return int(value)
        except ValueError:
            return float(value)
    return value


def _build_dataclass(cls, values: dict):
    base = cls()
    kw = {}
    names = {f.name for f in dataclasses.fields(cls)}
    for k, v in values.items():
        if k not in names:
            raise FormatError(f"unknown key {k!r} for {cls.__name__}")
        kw[k] = _coerce(v, getattr(base, k)) if isinstance(v, str) else v
    return dataclasses.replace(base, **kw)


@dataclasses.dataclass
class RunConfig:
    model: ModelConfig
    train: TrainConfig
    discovery: DiscoveryConfig


SECTIONS = (ModelConfig, TrainConfig, DiscoveryConfig)


def config_keys() -> dict[str, type]:
    out = {}
    for cls in SECTIONS:
        for f in dataclasses.fields(cls):
            out[f.name] = cls
    return out


def parse_run_config(text: str = "", overrides: dict | None = None, audio: bool = False) -> RunConfig:
    """Flat key=value text; ``overrides`` win over file values. Unknown keys are errors."""
    values = dict(_parse_kv(text.splitlines(), "config"))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    owners = config_keys()
    per = {cls: {} for cls in SECTIONS}
    for k, v in values.items():
        if k not in owners:
            raise FormatError(f"unknown config key {k!r}")
        per[owners[k]][k] = v
    model_defaults = ModelConfig.audio() if audio else ModelConfig()
    model_vals = {**model_defaults.as_dict(), **per[ModelConfig]}
    return RunConfig(
        _build_dataclass(ModelConfig, model_vals),
        _build_dataclass(TrainConfig, per[TrainConfig]),
        _build_dataclass(DiscoveryConfig, per[DiscoveryConfig]),
    )


def format_run_config(rc: RunConfig) -> str:
    lines = []
    for part in (rc.model, rc.train, rc.discovery):
        for f in dataclasses.fields(part):
            v = getattr(part, f.name)
            if v is not None:
                lines.append(f"{f.name}={v}")
    return "\n".join(lines) + "\n"


# --- PGM / CSV -----------------------------------------------------------------

def encode_pgm(M: np.ndarray, invert: bool = False, maxval: int = 255) -> str:
    """Plain (P2) grayscale image, min-max scaled; NaN cells are black."""
    M = np.asarray(M, dtype=np.float64)
    finite = np.isfinite(M)
    lo = M[finite].min() if finite.any() else 0.0
    hi = M[finite].max() if finite.any() else 1.0
    scaled = np.zeros_like(M) if hi <= lo else (M - lo) / (hi - lo)
    if invert:
        scaled = 1.0 - scaled
    px = np.where(finite, np.round(scaled * maxval), 0).astype(int)
    rows, cols = M.shape
    body = "\n".join(" ".join(str(v) for v in row) for row in px)
    return f"P2\n{cols} {rows}\n{maxval}\n{body}\n"


def decode_pgm(text: str) -> np.ndarray:
    tokens = [t for line in text.splitlines() for t in line.split("#", 1)[0].split()]
    if not tokens or tokens[0] != "P2":
        raise FormatError("not a plain PGM (P2) image")
    cols, rows, _ = int(tokens[1]), int(tokens[2]), int(tokens[3])
    vals = np.array([int(t) for t in tokens[4:]])
    if vals.size != rows * cols:
        raise FormatError("PGM pixel count does not match its size")
    return vals.reshape(rows, cols)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in r])


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- sections --------------------------------------------------------------------

def format_sections(groups: Sequence[PatternGroup], seconds: tuple[float, int] | None = None) -> str:
    """One group per line: ``id start:end start:end ...`` in frames, or in
    seconds under an ``@sr,hop`` header when ``seconds=(sr, hop)``."""
    lines = []
    if seconds is not None:
        sr, hop = seconds
        lines.append(f"@{sr:g},{hop}")
        spf = hop / sr
    for gid, g in enumerate(groups):
        if seconds is None:
            occ = " ".join(f"{o.start}:{o.end}" for o in g.occurrences)
        else:
            occ = " ".join(f"{o.start * spf:.6f}:{o.end * spf:.6f}" for o in g.occurrences)
        lines.append(f"{gid} {occ}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_sections(text: str) -> list[PatternGroup]:
    """Inverse of :func:`format_sections`; seconds are converted back to frames."""
    spf = None
    groups = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("@"):
            sr, hop = line[1:].split(",")
            spf = int(hop) / float(sr)
            continue
        parts = line.split()
        occ = []
        for tok in parts[1:]:
            try:
                a, b = tok.split(":")
                if spf is None:
                    occ.append(SectionOccurrence(int(a), int(b)))
                else:
                    occ.append(SectionOccurrence(int(round(float(a) / spf)), int(round(float(b) / spf))))
            except ValueError as e:
                raise FormatError(f"sections line {n}: bad occurrence {tok!r} ({e})") from None
        groups.append(PatternGroup(occ))
    return groups

"""Audio input: WAV reading, linear resampling, a direct (kernel-per-bin)
constant-Q magnitude spectrogram and per-frame contrast normalization."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

SAMPLE_RATE = 22050

_PCM = 1
_FLOAT = 3
_EXTENSIBLE = 0xFFFE


class WavError(ValueError):
    pass


@dataclass
class AudioBuffer:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("audio buffer must be a non-empty mono signal")
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be positive")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class CqtConfig:
    bins: int = 120
    bins_per_octave: int = 24
    f_min: float = 65.4
    hop: int = 1984

    @property
    def q(self) -> float:
        return 1.0 / (2.0 ** (1.0 / self.bins_per_octave) - 1.0)

    @property
    def f_max(self) -> float:
        return self.f_min * 2.0 ** (self.bins / self.bins_per_octave)

    def frequencies(self) -> np.ndarray:
        return self.f_min * 2.0 ** (np.arange(self.bins) / self.bins_per_octave)

    def window_lengths(self, sample_rate: float) -> np.ndarray:
        return np.round(self.q * sample_rate / self.frequencies()).astype(int)


@dataclass
class Spectrogram:
    frames: np.ndarray  # T x bins
    config: CqtConfig = field(default_factory=CqtConfig)
    sample_rate: float = SAMPLE_RATE

    @property
    def seconds_per_frame(self) -> float:
        return self.config.hop / self.sample_rate


# --- WAV ---------------------------------------------------------------------

def read_wav(data: bytes) -> AudioBuffer:
    """RIFF/WAVE with PCM16 or float32 samples, mono or stereo (averaged)."""
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavError("not a RIFF/WAVE file")
    pos = 12
    fmt = None
    payload = None
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        size = struct.unpack("<I", data[pos + 4:pos + 8])[0]
        body = data[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            if len(body) < 16:
                raise WavError("truncated fmt chunk")
            fmt = struct.unpack("<HHIIHH", body[:16])
            if fmt[0] == _EXTENSIBLE and len(body) >= 26:
                fmt = (struct.unpack("<H", body[24:26])[0],) + fmt[1:]
        elif cid == b"data":
            if len(body) < size:
                raise WavError(f"truncated data chunk: header says {size} bytes, found {len(body)}")
            payload = body
            break
        pos += 8 + size + (size & 1)
    if fmt is None:
        raise WavError("missing fmt chunk")
    if payload is None:
        raise WavError("missing data chunk")
    tag, channels, rate, _, block, bits = fmt
    if channels not in (1, 2):
        raise WavError(f"unsupported channel count {channels}")
    if tag == _PCM and bits == 16:
        x = np.frombuffer(payload[: len(payload) // 2 * 2], dtype="<i2").astype(np.float64) / 32768.0
    elif tag == _FLOAT and bits == 32:
        x = np.frombuffer(payload[: len(payload) // 4 * 4], dtype="<f4").astype(np.float64)
    else:
        raise WavError(f"unsupported codec (format tag {tag}, {bits} bits)")
    if x.size % channels:
        raise WavError("data chunk does not hold a whole number of frames")
    x = x.reshape(-1, channels).mean(axis=1)
    if x.size == 0:
        raise WavError("no samples")
    return AudioBuffer(x, float(rate))


def write_wav(a: AudioBuffer, float32: bool = False) -> bytes:
    if float32:
        payload = a.samples.astype("<f4").tobytes()
        tag, bits = _FLOAT, 32
    else:
        pcm = np.clip(np.round(a.samples * 32768.0), -32768, 32767).astype("<i2")
        payload = pcm.tobytes()
        tag, bits = _PCM, 16
    rate = int(round(a.sample_rate))
    block = bits // 8
    fmt = struct.pack("<HHIIHH", tag, 1, rate, rate * block, block, bits)
    chunks = b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", len(payload)) + payload
    return b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks


def resample_linear(a: AudioBuffer, target_rate: float) -> AudioBuffer:
    if target_rate <= 0:
        raise ValueError("target rate must be positive")
    if target_rate == a.sample_rate:
        return AudioBuffer(a.samples.copy(), a.sample_rate)
    n_out = max(1, int(np.floor(a.samples.size * target_rate / a.sample_rate)))
    t = np.arange(n_out) * (a.sample_rate / target_rate)
    return AudioBuffer(np.interp(t, np.arange(a.samples.size), a.samples), float(target_rate))


# --- constant-Q --------------------------------------------------------------

def cqt_kernels(cfg: CqtConfig, sample_rate: float) -> list[np.ndarray]:
    """Hann-windowed complex exponentials, one per bin, normalized by window sum."""
    kernels = []
    for f, n in zip(cfg.frequencies(), cfg.window_lengths(sample_rate)):
        win = np.hanning(n + 2)[1:-1]  # strictly positive taps
        k = win * np.exp(-2j * np.pi * f * np.arange(n) / sample_rate)
        kernels.append(k / win.sum())
    return kernels


def cqt(a: AudioBuffer, cfg: CqtConfig = CqtConfig(), chunk: int = 256) -> Spectrogram:
    """Magnitude CQT; frame t is centred on sample t*hop, edges zero-padded."""
    if cfg.f_max >= a.sample_rate / 2:
        raise ValueError(f"top bin {cfg.f_max:.1f} Hz is not below Nyquist for {a.sample_rate} Hz")
    n = a.samples.size
    T = n // cfg.hop
    if T < 1:
        raise ValueError(f"audio of {n} samples is shorter than one hop ({cfg.hop})")
    lengths = cfg.window_lengths(a.sample_rate)
    pad = int(lengths.max()) // 2 + 1
    x = np.concatenate([np.zeros(pad), a.samples, np.zeros(pad + int(lengths.max()))])
    centers = np.arange(T) * cfg.hop + pad
    out = np.zeros((T, cfg.bins))
    for k, ker in enumerate(cqt_kernels(cfg, a.sample_rate)):
        nk = ker.size
        starts = centers - nk // 2
        for c0 in range(0, T, chunk):
            s = starts[c0:c0 + chunk]
            idx = s[:, None] + np.arange(nk)[None, :]
            out[c0:c0 + chunk, k] = np.abs(x[idx] @ ker)
    return Spectrogram(out, cfg, a.sample_rate)


def contrast_normalize(s: Spectrogram, eps: float = 1e-8) -> Spectrogram:
    """Each frame to zero mean and unit variance (``eps`` guards silent frames)."""
    f = np.asarray(s.frames, dtype=np.float64)
    mu = f.mean(axis=1, keepdims=True)
    var = f.var(axis=1, keepdims=True)
    return Spectrogram((f - mu) / np.sqrt(var + eps), s.config, s.sample_rate)


def spectrogram_from_wav(data: bytes, cfg: CqtConfig = CqtConfig(), sample_rate: float = SAMPLE_RATE) -> Spectrogram:
    a = read_wav(data)
    if a.sample_rate != sample_rate:
        a = resample_linear(a, sample_rate)
    return contrast_normalize(cqt(a, cfg))

"""PCM audio loading, linear resampling and amplitude-threshold trimming.

The toolkit ingests RIFF/WAVE PCM 16-bit mono only; lossy codecs are
transcoded externally (e.g. `ffmpeg -i clip.mp3 -ac 1 -sample_fmt s16 clip.wav`).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np


class WavFormatError(ValueError):
    """Input bytes are not a supported RIFF/WAVE PCM16 mono file."""


@dataclass(frozen=True)
class Waveform:
    """Mono audio: amplitudes in [-1, 1] at a fixed sample rate."""

    samples: np.ndarray  # 1-D float64
    sample_rate_hz: int

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.samples.ndim != 1:
            raise ValueError("samples must be a 1-D array")
        if self.samples.size and float(np.max(np.abs(self.samples))) > 1.0 + 1e-6:
            raise ValueError("sample amplitudes exceed [-1, 1]")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


def load_wav(data: bytes) -> Waveform:
    """Decode RIFF/WAVE PCM16LE mono bytes; amplitudes are raw/32768."""
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError("not a RIFF/WAVE file")
    pos = 12
    fmt = None
    pcm = None
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        if body_start + chunk_size > len(data):
            raise WavFormatError(f"truncated {chunk_id.decode('ascii', 'replace')!r} chunk")
        body = data[body_start : body_start + chunk_size]
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise WavFormatError("fmt chunk too short")
            audio_format, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", body, 0)
            if audio_format != 1:
                raise WavFormatError(f"unsupported codec (format tag {audio_format}); only PCM is read")
            if channels != 1:
                raise WavFormatError(f"unsupported channel count {channels}; only mono is read")
            if bits != 16:
                raise WavFormatError(f"unsupported sample width {bits} bits; only 16-bit is read")
            fmt = rate
        elif chunk_id == b"data":
            pcm = body
        # chunks are word-aligned: odd sizes carry a pad byte
        pos = body_start + chunk_size + (chunk_size & 1)
    if fmt is None:
        raise WavFormatError("missing fmt chunk")
    if pcm is None:
        raise WavFormatError("missing data chunk")
    if len(pcm) % 2 != 0:
        raise WavFormatError("data chunk holds a partial sample")
    raw = np.frombuffer(pcm, dtype="<i2")
    return Waveform(samples=raw.astype(np.float64) / 32768.0, sample_rate_hz=fmt)


def save_wav(w: Waveform) -> bytes:
    """Serialize to RIFF/WAVE PCM16LE mono; round-trips load_wav output exactly."""
    scaled = np.clip(np.round(w.samples * 32768.0), -32768, 32767).astype("<i2")
    pcm = scaled.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(pcm),
        b"WAVE",
        b"fmt ",
        16,
        1,  # PCM
        1,  # mono
        w.sample_rate_hz,
        w.sample_rate_hz * 2,
        2,
        16,
        b"data",
        len(pcm),
    )
    return header + pcm


def resample_linear(w: Waveform, target_hz: int) -> Waveform:
    """Linear-interpolation resample; output length is round(n*target/source)."""
    if target_hz <= 0:
        raise ValueError("target_hz must be positive")
    if len(w.samples) == 0:
        raise ValueError("cannot resample an empty waveform")
    if target_hz == w.sample_rate_hz:
        return w
    n_out = int(np.floor(len(w.samples) * target_hz / w.sample_rate_hz + 0.5))
    positions = np.arange(n_out) * (w.sample_rate_hz / target_hz)
    # np.interp clamps past the final sample, matching the hold-last contract
    out = np.interp(positions, np.arange(len(w.samples)), w.samples)
    return Waveform(samples=out, sample_rate_hz=target_hz)


def trim_silence(w: Waveform, divisor: float = 30.0) -> Waveform:
    """Cut leading/trailing samples whose magnitude falls below max|x|/divisor.

    Samples exactly at the threshold are kept (removal is strict `<`).
    """
    if divisor <= 0:
        raise ValueError("divisor must be positive")
    if len(w.samples) == 0:
        raise ValueError("cannot trim an empty waveform")
    mags = np.abs(w.samples)
    peak = float(np.max(mags))
    if peak == 0.0:
        raise ValueError("all-zero waveform: nothing exceeds the trim threshold")
    theta = peak / divisor
    loud = np.flatnonzero(mags >= theta)
    first, last = int(loud[0]), int(loud[-1])
    return Waveform(samples=w.samples[first : last + 1], sample_rate_hz=w.sample_rate_hz)


def duration_ok(w: Waveform, min_s: float, max_s: float) -> bool:
    """True iff the duration lies in [min_s, max_s], both ends inclusive."""
    if min_s > max_s:
        raise ValueError("min_s must not exceed max_s")
    return min_s <= w.duration_s <= max_s

"""Audio buffers and RIFF PCM WAV I/O.

Only 16-bit signed little-endian mono PCM is accepted; anything else is
rejected with a diagnostic naming the offending header field. Samples map
to [-1, 1) by division by 32768.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PCM_SCALE = 32768.0


class WavFormatError(ValueError):
    """Raised when a WAV file is not 16-bit mono PCM."""


@dataclass
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int = 22050

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError(f"expected mono 1-D samples, got shape {self.samples.shape}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def require_analyzable(self):
        """Analysis ops need a non-empty, finite signal."""
        if len(self.samples) == 0:
            raise ValueError("audio buffer is empty")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("audio buffer contains non-finite samples")


def read_wav(path) -> AudioBuffer:
    """Read a RIFF PCM WAV file (16-bit signed LE, mono)."""
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != b"RIFF":
        raise WavFormatError(f"{path}: missing RIFF chunk id")
    if raw[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: RIFF form type is {raw[8:12]!r}, expected b'WAVE'")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        cid = raw[pos:pos + 4]
        (size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None:
        raise WavFormatError(f"{path}: no fmt chunk")
    if data is None:
        raise WavFormatError(f"{path}: no data chunk")
    if len(fmt) < 16:
        raise WavFormatError(f"{path}: fmt chunk truncated ({len(fmt)} bytes)")

    audio_format, channels, sample_rate, _brate, _balign, bits = struct.unpack_from("<HHIIHH", fmt)
    if audio_format != 1:
        raise WavFormatError(f"{path}: audio_format is {audio_format}, expected 1 (PCM)")
    if channels != 1:
        raise WavFormatError(f"{path}: channels is {channels}, expected 1 (mono)")
    if bits != 16:
        raise WavFormatError(f"{path}: bits_per_sample is {bits}, expected 16")

    pcm = np.frombuffer(data, dtype="<i2").astype(np.float64)
    return AudioBuffer(pcm / PCM_SCALE, sample_rate=int(sample_rate))


def write_wav(path, audio: AudioBuffer):
    """Write 16-bit mono PCM. Samples are clipped to the representable range."""
    x = np.clip(audio.samples, -1.0, 32767.0 / PCM_SCALE)
    pcm = np.round(x * PCM_SCALE).astype("<i2")
    data = pcm.tobytes()
    fmt = struct.pack("<HHIIHH", 1, 1, audio.sample_rate, audio.sample_rate * 2, 2, 16)
    out = b"".join([
        b"RIFF", struct.pack("<I", 4 + 8 + len(fmt) + 8 + len(data)), b"WAVE",
        b"fmt ", struct.pack("<I", len(fmt)), fmt,
        b"data", struct.pack("<I", len(data)), data,
    ])
    Path(path).write_bytes(out)

"""Frame grid shared by every analysis track."""

from __future__ import annotations

import math
from dataclasses import dataclass

DEFAULT_SAMPLE_RATE = 22050
DEFAULT_FFT_SIZE = 1024
DEFAULT_HOP = 256
DEFAULT_WINDOW = "hann"

_KNOWN_WINDOWS = ("hann", "rect")


@dataclass(frozen=True)
class FrameGrid:
    """Framing convention: frame ``t`` covers samples [t*hop, t*hop + fft_size).

    ``n_frames`` may exceed what a given signal strictly supports; analysis
    ops zero-pad the tail so tracks on the same grid always have the same
    length.
    """

    fft_size: int = DEFAULT_FFT_SIZE
    hop: int = DEFAULT_HOP
    window: str = DEFAULT_WINDOW
    n_frames: int = 0

    def __post_init__(self):
        if self.fft_size <= 0 or self.hop <= 0:
            raise ValueError(f"fft_size and hop must be positive, got {self.fft_size}, {self.hop}")
        if self.hop > self.fft_size:
            raise ValueError(f"hop ({self.hop}) must not exceed fft_size ({self.fft_size})")
        if self.window not in _KNOWN_WINDOWS:
            raise ValueError(f"unknown window {self.window!r}, expected one of {_KNOWN_WINDOWS}")
        if self.n_frames < 0:
            raise ValueError("n_frames must be >= 0")

    @classmethod
    def for_signal(cls, n_samples: int, fft_size: int = DEFAULT_FFT_SIZE,
                   hop: int = DEFAULT_HOP, window: str = DEFAULT_WINDOW) -> "FrameGrid":
        """Grid covering a signal of ``n_samples`` samples.

        n_frames = ceil((len - fft_size)/hop) + 1, floored at 1 for any
        non-empty signal (short signals get one zero-padded frame).
        """
        if n_samples <= 0:
            raise ValueError("cannot build a frame grid for an empty signal")
        n = math.ceil((n_samples - fft_size) / hop) + 1
        return cls(fft_size=fft_size, hop=hop, window=window, n_frames=max(1, n))

    def with_frames(self, n_frames: int) -> "FrameGrid":
        return FrameGrid(self.fft_size, self.hop, self.window, n_frames)

    def frame_start(self, t: int) -> int:
        return t * self.hop

    def covered_samples(self) -> int:
        """Sample count needed so no frame reads the zero pad."""
        if self.n_frames == 0:
            return 0
        return (self.n_frames - 1) * self.hop + self.fft_size

    def compatible_with(self, other: "FrameGrid") -> bool:
        """Same framing (fft/hop/window); frame counts may differ."""
        return (self.fft_size == other.fft_size and self.hop == other.hop
                and self.window == other.window)

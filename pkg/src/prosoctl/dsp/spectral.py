"""STFT, least-squares inverse STFT, and mel filterbank projection."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from prosoctl.dsp.audio import AudioBuffer
from prosoctl.dsp.grid import FrameGrid


@lru_cache(maxsize=16)
def _window(name: str, size: int) -> np.ndarray:
    if name == "hann":
        # periodic Hann so overlapped squares sum to a constant
        n = np.arange(size)
        w = 0.5 - 0.5 * np.cos(2.0 * np.pi * n / size)
    elif name == "rect":
        w = np.ones(size)
    else:
        raise ValueError(f"unknown window {name!r}")
    w.flags.writeable = False
    return w


def analysis_window(grid: FrameGrid) -> np.ndarray:
    return _window(grid.window, grid.fft_size)


def frame_signal(samples: np.ndarray, grid: FrameGrid) -> np.ndarray:
    """Slice a signal into (n_frames, fft_size) with a zero-padded tail.

    Frame t covers samples [t*hop, t*hop + fft_size); frames past the end
    of the signal read zeros.
    """
    need = grid.covered_samples()
    x = np.asarray(samples, dtype=np.float64)
    if need > len(x):
        x = np.concatenate([x, np.zeros(need - len(x))])
    idx = np.arange(grid.fft_size)[None, :] + grid.hop * np.arange(grid.n_frames)[:, None]
    return x[idx]


def stft(audio: AudioBuffer, grid: FrameGrid) -> np.ndarray:
    """Windowed DFT per frame; shape (n_frames, fft_size//2 + 1), complex."""
    audio.require_analyzable()
    frames = frame_signal(audio.samples, grid) * analysis_window(grid)
    return np.fft.rfft(frames, axis=1)


def istft_least_squares(spec: np.ndarray, grid: FrameGrid,
                        n_samples: int | None = None) -> np.ndarray:
    """Least-squares signal estimate from a complex spectrogram.

    Classic windowed overlap-add divided by the summed squared window:
    the minimizer of the per-frame reconstruction error, which is what
    Griffin-Lim's convergence argument requires.
    """
    if spec.shape != (grid.n_frames, grid.fft_size // 2 + 1):
        raise ValueError(f"spectrogram shape {spec.shape} does not match grid "
                         f"({grid.n_frames} x {grid.fft_size // 2 + 1})")
    if n_samples is None:
        n_samples = grid.covered_samples()
    w = analysis_window(grid)
    frames = np.fft.irfft(spec, n=grid.fft_size, axis=1)
    num = np.zeros(grid.covered_samples())
    den = np.zeros(grid.covered_samples())
    for t in range(grid.n_frames):
        s = t * grid.hop
        num[s:s + grid.fft_size] += frames[t] * w
        den[s:s + grid.fft_size] += w * w
    out = np.zeros_like(num)
    nz = den > 1e-12
    out[nz] = num[nz] / den[nz]
    if n_samples <= len(out):
        return out[:n_samples]
    return np.concatenate([out, np.zeros(n_samples - len(out))])


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=16)
def _mel_filterbank_cached(n_mels: int, fft_size: int, sample_rate: int,
                           fmin: float, fmax: float):
    if not (0.0 <= fmin < fmax <= sample_rate / 2):
        raise ValueError(f"invalid mel band edges: fmin={fmin}, fmax={fmax}, "
                         f"nyquist={sample_rate / 2}")
    n_bins = fft_size // 2 + 1
    bin_hz = np.arange(n_bins) * sample_rate / fft_size
    mel_pts = np.linspace(_hz_to_mel(fmin), _hz_to_mel(fmax), n_mels + 2)
    hz_pts = _mel_to_hz(mel_pts)
    fb = np.zeros((n_mels, n_bins))
    for j in range(n_mels):
        lo, ctr, hi = hz_pts[j], hz_pts[j + 1], hz_pts[j + 2]
        rising = (bin_hz - lo) / max(ctr - lo, 1e-12)
        falling = (hi - bin_hz) / max(hi - ctr, 1e-12)
        fb[j] = np.clip(np.minimum(rising, falling), 0.0, None)
    fb.flags.writeable = False
    centers = hz_pts[1:-1].copy()
    centers.flags.writeable = False
    return fb, centers


def mel_filterbank(n_mels: int, fft_size: int, sample_rate: int,
                   fmin: float, fmax: float) -> tuple[np.ndarray, np.ndarray]:
    """Triangular filterbank (n_mels x n_bins) and its center frequencies in Hz."""
    return _mel_filterbank_cached(n_mels, fft_size, sample_rate, float(fmin), float(fmax))


@dataclass
class MelSpectrogram:
    frames: np.ndarray  # (n_frames, n_mels), non-negative
    grid: FrameGrid
    sample_rate: int
    n_mels: int
    fmin: float
    fmax: float

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.shape != (self.grid.n_frames, self.n_mels):
            raise ValueError(f"mel frames shape {self.frames.shape} does not match "
                             f"grid ({self.grid.n_frames} x {self.n_mels})")
        if not np.all(np.isfinite(self.frames)) or np.any(self.frames < 0):
            raise ValueError("mel frames must be finite and non-negative")


def mel_spectrogram(audio: AudioBuffer, grid: FrameGrid, n_mels: int = 80,
                    fmin: float = 0.0, fmax: float = 8000.0) -> MelSpectrogram:
    """Magnitude spectrogram projected onto triangular mel filters."""
    fb, _ = mel_filterbank(n_mels, grid.fft_size, audio.sample_rate, fmin, fmax)
    mag = np.abs(stft(audio, grid))
    return MelSpectrogram(frames=mag @ fb.T, grid=grid, sample_rate=audio.sample_rate,
                          n_mels=n_mels, fmin=float(fmin), fmax=float(fmax))

"""Griffin-Lim phase reconstruction from a mel spectrogram.

The mel frames are first pseudo-inverted to a linear magnitude
spectrogram (Moore-Penrose inverse of the filterbank, clamped at 0),
then phases are recovered by alternating projections: inverse STFT via
the least-squares overlap-add estimate, re-analysis, magnitude
replacement. With the least-squares inverse the spectral-convergence
error is non-increasing, which callers can assert per iteration.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from prosoctl.dsp.audio import AudioBuffer
from prosoctl.dsp.grid import FrameGrid
from prosoctl.dsp.spectral import (MelSpectrogram, analysis_window, frame_signal,
                                   istft_least_squares, mel_filterbank)


@lru_cache(maxsize=16)
def _mel_pinv(n_mels: int, fft_size: int, sample_rate: int, fmin: float, fmax: float):
    fb, _ = mel_filterbank(n_mels, fft_size, sample_rate, fmin, fmax)
    p = np.linalg.pinv(fb)
    p.flags.writeable = False
    return p


def mel_to_linear(mel: MelSpectrogram) -> np.ndarray:
    """Pseudo-inverse projection back to linear magnitude, clamped at 0."""
    pinv = _mel_pinv(mel.n_mels, mel.grid.fft_size, mel.sample_rate, mel.fmin, mel.fmax)
    return np.clip(mel.frames @ pinv.T, 0.0, None)


def _project_magnitude(spec: np.ndarray, target_mag: np.ndarray) -> np.ndarray:
    """Closest spectrogram with the target magnitude (and real DC/Nyquist bins)."""
    phase = np.angle(spec)
    out = target_mag * np.exp(1j * phase)
    # DC and Nyquist of a real signal are real; project onto {+-M}
    for k in (0, spec.shape[1] - 1):
        sign = np.where(spec[:, k].real < 0.0, -1.0, 1.0)
        out[:, k] = target_mag[:, k] * sign
    return out


def griffin_lim_trace(mel: MelSpectrogram, n_iters: int = 60,
                      seed: int = 0) -> tuple[AudioBuffer, np.ndarray]:
    """Reconstruct audio and return the spectral-convergence error per iterate.

    errors[k] = ||  |STFT(x_k)| - M  || / ||M|| for k = 0..n_iters, where
    x_0 is the inverse STFT of M with seeded random phases.
    """
    if n_iters < 0:
        raise ValueError(f"n_iters must be >= 0, got {n_iters}")
    grid = mel.grid
    mag = mel_to_linear(mel)
    mag_norm = float(np.linalg.norm(mag))

    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=mag.shape)
    spec = mag * np.exp(1j * phases)
    spec[:, 0] = mag[:, 0]
    spec[:, -1] = mag[:, -1]

    window = analysis_window(grid)

    def _analyze(x: np.ndarray) -> np.ndarray:
        return np.fft.rfft(frame_signal(x, grid) * window, axis=1)

    def _error(x: np.ndarray) -> float:
        if mag_norm == 0.0:
            return 0.0
        return float(np.linalg.norm(np.abs(_analyze(x)) - mag) / mag_norm)

    x = istft_least_squares(spec, grid)
    errors = [_error(x)]
    for _ in range(n_iters):
        spec = _project_magnitude(_analyze(x), mag)
        x = istft_least_squares(spec, grid)
        errors.append(_error(x))

    return AudioBuffer(x, sample_rate=mel.sample_rate), np.asarray(errors)


def griffin_lim(mel: MelSpectrogram, n_iters: int = 60, seed: int = 0) -> AudioBuffer:
    """Waveform from a mel spectrogram; deterministic given the seed."""
    audio, _ = griffin_lim_trace(mel, n_iters=n_iters, seed=seed)
    return audio

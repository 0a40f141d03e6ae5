"""Signal-processing kernels on one shared frame grid.

All analysis (STFT, mel, F0, RMS) and synthesis-side reconstruction
(Griffin-Lim) use the same framing convention: frame ``t`` covers
samples ``[t*hop, t*hop + fft_size)`` with a zero-padded tail.
"""

from prosoctl.dsp.audio import AudioBuffer, read_wav, write_wav
from prosoctl.dsp.energy import EnergyTrack, rms_energy
from prosoctl.dsp.grid import DEFAULT_FFT_SIZE, DEFAULT_HOP, DEFAULT_SAMPLE_RATE, FrameGrid
from prosoctl.dsp.griffinlim import griffin_lim, griffin_lim_trace
from prosoctl.dsp.pitch import F0Config, F0Track, estimate_f0
from prosoctl.dsp.spectral import (
    MelSpectrogram,
    frame_signal,
    istft_least_squares,
    mel_filterbank,
    mel_spectrogram,
    stft,
)

__all__ = [
    "AudioBuffer",
    "DEFAULT_FFT_SIZE",
    "DEFAULT_HOP",
    "DEFAULT_SAMPLE_RATE",
    "EnergyTrack",
    "F0Config",
    "F0Track",
    "FrameGrid",
    "MelSpectrogram",
    "estimate_f0",
    "frame_signal",
    "griffin_lim",
    "griffin_lim_trace",
    "istft_least_squares",
    "mel_filterbank",
    "mel_spectrogram",
    "read_wav",
    "rms_energy",
    "stft",
    "write_wav",
]

import numpy as np
import pytest

from prosoctl.dsp import (AudioBuffer, FrameGrid, estimate_f0, mel_filterbank,
                          mel_spectrogram, rms_energy, stft)

SR = 22050


def tone(freq, seconds=1.0, amp=0.5, sr=SR):
    t = np.arange(int(seconds * sr)) / sr
    return AudioBuffer(amp * np.sin(2 * np.pi * freq * t), sample_rate=sr)


def test_stft_zero_signal_is_zero():
    audio = AudioBuffer(np.zeros(4096), sample_rate=SR)
    grid = FrameGrid.for_signal(len(audio))
    assert np.all(stft(audio, grid) == 0)


def test_stft_rejects_empty_and_nonfinite():
    grid = FrameGrid(n_frames=1)
    with pytest.raises(ValueError):
        stft(AudioBuffer(np.array([]), SR), grid)
    bad = AudioBuffer(np.ones(2048), SR)
    bad.samples[7] = np.nan
    with pytest.raises(ValueError):
        stft(bad, FrameGrid.for_signal(2048))


def test_stft_sine_at_bin_center_rect_window_hits_one_bin():
    n_fft = 1024
    k = 40  # bin index; freq = k * sr / n_fft
    freq = k * SR / n_fft
    grid = FrameGrid(fft_size=n_fft, hop=256, window="rect", n_frames=9)
    x = tone(freq, seconds=grid.covered_samples() / SR)
    spec = stft(AudioBuffer(x.samples[:grid.covered_samples()], SR), grid)
    power = np.abs(spec) ** 2
    for t in range(grid.n_frames):
        total = power[t].sum()
        assert power[t, k] / total > 1.0 - 1e-9


def test_stft_parseval_per_frame():
    # time-domain oracle: energy of the windowed frame, computed by direct
    # slicing of the zero-padded signal
    rng = np.random.default_rng(7)
    x = rng.standard_normal(5000) * 0.1
    grid = FrameGrid.for_signal(len(x))
    audio = AudioBuffer(x, SR)
    spec = stft(audio, grid)
    n = grid.fft_size
    w = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
    padded = np.concatenate([x, np.zeros(grid.covered_samples() - len(x))])
    weights = np.full(n // 2 + 1, 2.0)
    weights[0] = weights[-1] = 1.0
    for t in range(grid.n_frames):
        frame = padded[t * grid.hop:t * grid.hop + n] * w
        energy_time = np.sum(frame ** 2)
        energy_freq = np.sum(weights * np.abs(spec[t]) ** 2) / n
        assert energy_freq == pytest.approx(energy_time, rel=1e-6)


def test_mel_zero_signal():
    audio = AudioBuffer(np.zeros(4096), sample_rate=SR)
    grid = FrameGrid.for_signal(len(audio))
    mel = mel_spectrogram(audio, grid)
    assert np.all(mel.frames == 0)
    assert mel.frames.shape == (grid.n_frames, 80)


def test_mel_white_noise_all_bins_positive():
    rng = np.random.default_rng(3)
    audio = AudioBuffer(0.3 * rng.standard_normal(8192), SR)
    grid = FrameGrid.for_signal(len(audio))
    mel = mel_spectrogram(audio, grid)
    assert np.all(mel.frames > 0)


def test_mel_tone_hits_filter_nearest_220hz():
    audio = tone(220.0)
    grid = FrameGrid.for_signal(len(audio))
    mel = mel_spectrogram(audio, grid)
    _, centers = mel_filterbank(80, grid.fft_size, SR, 0.0, 8000.0)
    hit = int(np.argmax(mel.frames.sum(axis=0)))
    assert hit == int(np.argmin(np.abs(centers - 220.0)))


def test_mel_invalid_band_edges_rejected():
    audio = tone(220.0, seconds=0.2)
    grid = FrameGrid.for_signal(len(audio))
    with pytest.raises(ValueError):
        mel_spectrogram(audio, grid, fmax=SR)  # above nyquist
    with pytest.raises(ValueError):
        mel_spectrogram(audio, grid, n_mels=10, fmin=5000.0, fmax=1000.0)


def test_track_lengths_agree_on_shared_grid():
    rng = np.random.default_rng(11)
    sig = 0.2 * rng.standard_normal(SR) + tone(180.0, 1.0, 0.3).samples
    audio = AudioBuffer(sig, SR)
    grid = FrameGrid.for_signal(len(audio))
    mel = mel_spectrogram(audio, grid)
    f0 = estimate_f0(audio, grid)
    en = rms_energy(audio, grid)
    assert len(f0) == len(en) == mel.frames.shape[0] == grid.n_frames

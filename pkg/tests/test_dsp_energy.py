import numpy as np
import pytest

from prosoctl.dsp import AudioBuffer, FrameGrid, rms_energy

SR = 22050


def test_zero_signal_zero_rms():
    audio = AudioBuffer(np.zeros(3000), SR)
    grid = FrameGrid.for_signal(len(audio))
    track = rms_energy(audio, grid)
    assert np.all(track.rms == 0)


def test_sine_rms_is_amplitude_over_sqrt2():
    # frame much longer than the period: 4096 samples vs ~100-sample period
    amp = 0.4
    t = np.arange(3 * 4096) / SR
    audio = AudioBuffer(amp * np.sin(2 * np.pi * 220.0 * t), SR)
    grid = FrameGrid(fft_size=4096, hop=4096, n_frames=3)
    track = rms_energy(audio, grid)
    assert track.rms == pytest.approx(amp / np.sqrt(2), rel=0.01)


def test_homogeneity_power_of_two_is_exact():
    rng = np.random.default_rng(5)
    x = rng.standard_normal(5000) * 0.2
    audio = AudioBuffer(x, SR)
    grid = FrameGrid.for_signal(len(x))
    base = rms_energy(audio, grid).rms
    scaled = rms_energy(AudioBuffer(4.0 * x, SR), grid).rms
    assert np.array_equal(scaled, 4.0 * base)


def test_homogeneity_general_scale():
    rng = np.random.default_rng(6)
    x = rng.standard_normal(4000) * 0.2
    grid = FrameGrid.for_signal(len(x))
    base = rms_energy(AudioBuffer(x, SR), grid).rms
    for c in (-1.7, 0.3, 9.99):
        scaled = rms_energy(AudioBuffer(c * x, SR), grid).rms
        np.testing.assert_allclose(scaled, abs(c) * base, rtol=1e-12)

"""Render audio from per-phone (F0, energy, duration).

Each phone occupies exactly round(duration) frames of hop samples.
Voiced phones get a harmonic source with a phase-continuous fundamental
(1/n rolloff, harmonics up to min(8*f0, 0.9*nyquist)); unvoiced phones
get seeded Gaussian noise. The source runs through the phone's formant
resonators with filter state carried across joins, then per-phone gains
are solved by fixed point so the mean frame RMS of each phone matches
its energy target on the analysis grid, bleed and zero-padding included.
Gains ramp linearly across a short crossfade window at each join.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import lfilter

from prosoctl.corpus.alignment import AlignmentSpan, PhoneToken, Utterance
from prosoctl.dsp.audio import AudioBuffer
from prosoctl.dsp.energy import rms_energy
from prosoctl.dsp.grid import DEFAULT_FFT_SIZE, DEFAULT_HOP, DEFAULT_SAMPLE_RATE, FrameGrid
from prosoctl.dsp.spectral import MelSpectrogram, mel_spectrogram
from prosoctl.features import DURATION, ENERGY, F0, RAW, PhoneFeatures
from prosoctl.seeds import rng_for
from prosoctl.synth.timbre import TimbreTable, builtin_timbre_table

_GAIN_ITERS = 12
_GAIN_TOL = 1e-4


class SynthesisError(ValueError):
    pass


@dataclass
class SynthConfig:
    sample_rate: int = DEFAULT_SAMPLE_RATE
    hop: int = DEFAULT_HOP
    fft_size: int = DEFAULT_FFT_SIZE
    window: str = "hann"
    timbre: TimbreTable = field(default_factory=builtin_timbre_table)
    crossfade_ms: float = 5.0
    seed: int = 0
    f0_min: float = 60.0
    f0_max: float = 400.0

    def grid(self, n_frames: int) -> FrameGrid:
        return FrameGrid(fft_size=self.fft_size, hop=self.hop, window=self.window,
                         n_frames=n_frames)


@dataclass
class Rendition:
    audio: AudioBuffer
    realized: Utterance          # spans on the analysis grid, re-ingestible
    grid: FrameGrid
    features: PhoneFeatures      # raw features actually rendered
    warnings: list[str] = field(default_factory=list)


def round_frames(duration: float) -> int:
    """Deterministic round-half-up to integer frames."""
    return int(np.floor(duration + 0.5))


def _resonator_coeffs(center_hz: float, bandwidth_hz: float, sr: int):
    c = -np.exp(-2.0 * np.pi * bandwidth_hz / sr)
    b = 2.0 * np.exp(-np.pi * bandwidth_hz / sr) * np.cos(2.0 * np.pi * center_hz / sr)
    a = 1.0 - b - c
    return a, b, c


def _harmonic_source(f0: float, n_samples: int, phase0: float, sr: int):
    """Harmonic sum with 1/n rolloff; returns (signal, end phase)."""
    n_harm = max(1, int(min(8.0 * f0, 0.45 * sr) / f0))
    phase = phase0 + 2.0 * np.pi * f0 * (np.arange(n_samples) + 1) / sr
    sig = np.zeros(n_samples)
    for k in range(1, n_harm + 1):
        sig += np.sin(k * phase) / k
    return sig, float(phase[-1]) if n_samples else phase0


def _phone_frames(features: PhoneFeatures, tokens: list[PhoneToken]) -> list[int]:
    frames = []
    for i, tok in enumerate(tokens):
        if tok.is_boundary:
            frames.append(0)
            continue
        n = round_frames(features.values[i, DURATION])
        if n < 1:
            raise SynthesisError(f"phone {i} ({tok.symbol!r}) rounds to {n} frames; "
                                 f"durations must be >= 1 frame")
        frames.append(n)
    return frames


def synthesize(utt: Utterance, features: PhoneFeatures, cfg: SynthConfig) -> Rendition:
    """Render the utterance; deterministic for fixed inputs and seed."""
    if features.space != RAW:
        raise SynthesisError("synthesize expects raw-space features")
    tokens = utt.phones
    if len(features) != len(tokens):
        raise SynthesisError(f"feature count {len(features)} != token count {len(tokens)}")
    frames = _phone_frames(features, tokens)
    total_frames = sum(frames)
    if total_frames == 0:
        raise SynthesisError("utterance renders to zero frames")

    warnings = []
    sr = cfg.sample_rate
    hop = cfg.hop
    length = total_frames * hop
    source = np.zeros(length)
    segments = []  # (token index, start sample, end sample, voiced)
    phase = 0.0
    pos = 0
    for i, tok in enumerate(tokens):
        if frames[i] == 0:
            continue
        n = frames[i] * hop
        timbre = cfg.timbre.lookup(tok.symbol)
        if timbre.voiced:
            f0 = float(features.values[i, F0])
            if f0 <= 0.0:
                f0 = cfg.f0_min
                warnings.append(f"phone {i} ({tok.symbol!r}): voiced with no F0, "
                                f"using {cfg.f0_min} Hz")
            elif not (cfg.f0_min <= f0 <= cfg.f0_max):
                clamped = float(np.clip(f0, cfg.f0_min, cfg.f0_max))
                warnings.append(f"phone {i} ({tok.symbol!r}): F0 {f0:.1f} Hz outside "
                                f"[{cfg.f0_min}, {cfg.f0_max}], clamped to {clamped:.1f}")
                f0 = clamped
            sig, phase = _harmonic_source(f0, n, phase, sr)
        else:
            rng = rng_for(cfg.seed, "noise", utt.utterance_id, i)
            sig = rng.standard_normal(n)
        source[pos:pos + n] = sig
        segments.append((i, pos, pos + n, timbre.voiced))
        pos += n

    # formant shaping, filter state carried across phone joins
    shaped = np.zeros(length)
    states: dict[int, np.ndarray] = {}
    for i, start, end, _ in segments:
        timbre = cfg.timbre.lookup(tokens[i].symbol)
        seg = source[start:end]
        for fi, spec in enumerate(timbre.formants):
            a, b, c = _resonator_coeffs(spec.center_hz, spec.bandwidth_hz, sr)
            zi = states.get(fi, np.zeros(2))
            seg, zf = lfilter([a], [1.0, -b, -c], seg, zi=zi)
            states[fi] = zf
            seg = seg * spec.gain
        # normalize to unit sample RMS so gains start at the energy target
        rms = np.sqrt(np.mean(seg * seg))
        if rms > 1e-12:
            seg = seg / rms
        shaped[start:end] = seg

    grid = cfg.grid(total_frames)
    targets = features.values[:, ENERGY]
    gains = {i: float(targets[i]) for i, *_ in segments}
    ramp = int(round(cfg.crossfade_ms * sr / 1000.0))

    def assemble() -> np.ndarray:
        g = np.zeros(length)
        for i, start, end, _ in segments:
            g[start:end] = gains[i]
        for k in range(1, len(segments)):
            i_prev, _, j_prev, _ = segments[k - 1]
            i_cur, j_cur, end_cur, _ = segments[k]
            half = min(ramp // 2, (j_prev - segments[k - 1][1]) // 2,
                       (end_cur - j_cur) // 2)
            if half > 0:
                w = np.linspace(0.0, 1.0, 2 * half, endpoint=False)
                g[j_cur - half:j_cur + half] = (gains[i_prev] * (1.0 - w)
                                                + gains[i_cur] * w)
        return shaped * g

    audio_samples = assemble()
    # fixed point: match each phone's mean frame RMS on the analysis grid
    spans = {}
    frame_pos = 0
    for i, tok in enumerate(tokens):
        if frames[i] > 0:
            spans[i] = (frame_pos, frame_pos + frames[i] - 1)
            frame_pos += frames[i]
    for _ in range(_GAIN_ITERS):
        track = rms_energy(AudioBuffer(audio_samples, sr), grid).rms
        worst = 0.0
        for i, *_ in segments:
            a, b = spans[i]
            measured = float(track[a:b + 1].mean())
            target = float(targets[i])
            if target <= 0.0:
                gains[i] = 0.0
                continue
            if measured > 1e-12:
                ratio = target / measured
                worst = max(worst, abs(ratio - 1.0))
                gains[i] *= ratio
        audio_samples = assemble()
        if worst < _GAIN_TOL:
            break

    realized_tokens = []
    for i, tok in enumerate(tokens):
        span = AlignmentSpan(*spans[i]) if i in spans else None
        realized_tokens.append(PhoneToken(tok.symbol, tok.kind, tok.stressed, span))
    realized = Utterance(utterance_id=utt.utterance_id, speaker_id=utt.speaker_id,
                         phones=realized_tokens, sample_rate=sr, hop=hop,
                         n_frames=total_frames)
    return Rendition(audio=AudioBuffer(audio_samples, sr), realized=realized, grid=grid,
                     features=features.copy(), warnings=warnings)


def render_mel(rendition: Rendition, n_mels: int = 80, fmin: float = 0.0,
               fmax: float = 8000.0) -> MelSpectrogram:
    """Mel analysis of the rendition on its own grid."""
    return mel_spectrogram(rendition.audio, rendition.grid, n_mels=n_mels,
                           fmin=fmin, fmax=fmax)

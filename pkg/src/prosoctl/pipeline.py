"""End-to-end wiring: corpus directories to feature records and stats."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from prosoctl.corpus.alignment import Utterance, load_alignment
from prosoctl.corpus.store import FeatureRecord
from prosoctl.dsp.audio import read_wav
from prosoctl.dsp.energy import rms_energy
from prosoctl.dsp.grid import DEFAULT_FFT_SIZE, FrameGrid
from prosoctl.dsp.pitch import F0Config, estimate_f0
from prosoctl.features import (PhoneFeatures, SpeakerStats, compute_speaker_stats,
                               extract_per_phone, normalize, stamp_stats_version)


def load_corpus(align_dir) -> list[Utterance]:
    """All alignment JSON files under a directory, sorted by utterance id."""
    paths = sorted(Path(align_dir).glob("*.json"))
    if not paths:
        raise FileNotFoundError(f"no alignment files under {align_dir}")
    return sorted((load_alignment(p) for p in paths), key=lambda u: u.utterance_id)


def analysis_grid_for(utt: Utterance, n_samples: int,
                      fft_size: int = DEFAULT_FFT_SIZE) -> FrameGrid:
    """Grid covering both the signal and every alignment span (zero-pad tail)."""
    grid = FrameGrid.for_signal(n_samples, fft_size=fft_size, hop=utt.hop)
    need = utt.last_frame + 1
    if need > grid.n_frames:
        grid = grid.with_frames(need)
    return grid


def extract_features(utt: Utterance, wav_path, f0_cfg: F0Config = F0Config()) -> FeatureRecord:
    """Measure one aligned utterance's audio into a raw FeatureRecord."""
    audio = read_wav(wav_path)
    if audio.sample_rate != utt.sample_rate:
        raise ValueError(f"{wav_path}: sample_rate {audio.sample_rate} does not match "
                         f"alignment ({utt.sample_rate})")
    grid = analysis_grid_for(utt, len(audio))
    track = estimate_f0(audio, grid, f0_cfg)
    energy = rms_energy(audio, grid)
    feats = extract_per_phone(track, energy, utt)
    return FeatureRecord(
        utterance_id=utt.utterance_id, speaker_id=utt.speaker_id,
        symbols=[t.symbol for t in utt.phones], kinds=[t.kind for t in utt.phones],
        raw=feats.values)


def extract_corpus(utterances: list[Utterance], wav_dir,
                   f0_cfg: F0Config = F0Config(), jobs: int = 1) -> list[FeatureRecord]:
    """Extract every utterance; output order is by utterance id for any job count."""
    wav_dir = Path(wav_dir)
    utterances = sorted(utterances, key=lambda u: u.utterance_id)
    paths = [wav_dir / f"{u.utterance_id}.wav" for u in utterances]
    if jobs <= 1:
        return [extract_features(u, p, f0_cfg) for u, p in zip(utterances, paths)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(extract_features, u, p, f0_cfg)
                   for u, p in zip(utterances, paths)]
        return [f.result() for f in futures]


def compute_all_stats(records: list[FeatureRecord]) -> dict[str, SpeakerStats]:
    """Per-speaker stats with one shared content-derived stats_version."""
    speakers = sorted({r.speaker_id for r in records})
    stats = [compute_speaker_stats(records, spk) for spk in speakers]
    stamp_stats_version(stats)
    return {s.speaker_id: s for s in stats}


def normalize_records(records: list[FeatureRecord],
                      stats_by_speaker: dict[str, SpeakerStats]) -> list[FeatureRecord]:
    """Fill normalized features in place (records are returned for chaining)."""
    for rec in records:
        stats = stats_by_speaker[rec.speaker_id]
        mask = [k != "phone" for k in rec.kinds]
        z = normalize(PhoneFeatures(rec.raw.copy()), stats, boundary_mask=mask)
        rec.normalized = z.values
        rec.stats_version = stats.stats_version
    return records

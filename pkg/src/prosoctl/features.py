"""Per-phone acoustic features and per-speaker normalization.

Each token gets a 3-vector (mean voiced F0, mean frame RMS, duration in
frames). Boundary tokens carry (0, 0, 0) in both raw and normalized
space; a raw F0 of 0 marks a fully unvoiced phone and also passes through
normalization as 0 so the sentinel is stable in both spaces.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from prosoctl.corpus.alignment import Utterance
from prosoctl.corpus.store import FeatureRecord
from prosoctl.dsp.energy import EnergyTrack
from prosoctl.dsp.pitch import F0Track

F0, ENERGY, DURATION = 0, 1, 2
FEATURE_NAMES = ("f0", "energy", "duration")
STD_EPS = 1e-8

RAW = "raw"
NORMALIZED = "normalized"


class SpaceMismatchError(ValueError):
    """A raw-space op got normalized features, or vice versa."""


class VersionMismatchError(ValueError):
    """stats_version of the features does not match the supplied stats."""


@dataclass(frozen=True)
class AcousticFeatureVector:
    f0: float
    energy: float
    duration: float
    space: str = RAW

    def as_row(self) -> np.ndarray:
        return np.array([self.f0, self.energy, self.duration])


@dataclass
class PhoneFeatures:
    """A (N, 3) feature matrix tagged with the space it lives in."""

    values: np.ndarray
    space: str = RAW
    stats_version: str | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != 3:
            raise ValueError(f"expected (N, 3) features, got {self.values.shape}")
        if self.space not in (RAW, NORMALIZED):
            raise ValueError(f"unknown feature space {self.space!r}")

    def __len__(self) -> int:
        return len(self.values)

    def copy(self) -> "PhoneFeatures":
        return PhoneFeatures(self.values.copy(), self.space, self.stats_version)

    def vector(self, i: int) -> AcousticFeatureVector:
        f0, en, dur = self.values[i]
        return AcousticFeatureVector(float(f0), float(en), float(dur), self.space)


def extract_per_phone(f0: F0Track, energy: EnergyTrack, utt: Utterance) -> PhoneFeatures:
    """Aggregate the frame tracks into one raw vector per token.

    Per phone: F0 is the mean over voiced frames in its span (0 if none
    are voiced), energy the mean frame RMS, duration the span length.
    Boundary tokens get (0, 0, 0).
    """
    if not f0.grid.compatible_with(energy.grid) or len(f0) != len(energy):
        raise ValueError("F0 and energy tracks must share one frame grid")
    if utt.hop != f0.grid.hop:
        raise ValueError(f"utterance hop {utt.hop} does not match track hop {f0.grid.hop}")
    n_frames = len(f0)
    out = np.zeros((len(utt.phones), 3))
    for i, tok in enumerate(utt.phones):
        if tok.is_boundary:
            continue
        if tok.span is None:
            raise ValueError(f"phones[{i}] ({tok.symbol!r}) has no alignment span")
        a, b = tok.span.start_frame, tok.span.end_frame
        if b >= n_frames:
            raise ValueError(f"phones[{i}] span ends at frame {b} but tracks have "
                             f"{n_frames} frames")
        voiced = f0.voicing[a:b + 1]
        out[i, F0] = f0.f0[a:b + 1][voiced].mean() if voiced.any() else 0.0
        out[i, ENERGY] = energy.rms[a:b + 1].mean()
        out[i, DURATION] = tok.span.n_frames
    return PhoneFeatures(out, RAW)


@dataclass(frozen=True)
class FeatureStats:
    mean: float
    std: float  # population
    count: int


@dataclass
class SpeakerStats:
    speaker_id: str
    f0: FeatureStats
    energy: FeatureStats
    duration: FeatureStats
    stats_version: str = ""

    def by_index(self, j: int) -> FeatureStats:
        return (self.f0, self.energy, self.duration)[j]

    def means(self) -> np.ndarray:
        return np.array([self.f0.mean, self.energy.mean, self.duration.mean])

    def stds(self) -> np.ndarray:
        return np.array([self.f0.std, self.energy.std, self.duration.std])


def _population_stats(values: np.ndarray) -> FeatureStats:
    if len(values) < 2:
        raise ValueError(f"need >= 2 contributing phones, got {len(values)}")
    return FeatureStats(mean=float(values.mean()), std=float(values.std()),
                        count=int(len(values)))


def compute_speaker_stats(records: list[FeatureRecord], speaker_id: str) -> SpeakerStats:
    """Population mean/std per feature over one speaker's training records.

    F0 stats use voiced phones only (raw F0 > 0); energy and duration
    stats exclude boundary tokens.
    """
    rows = []
    kinds = []
    for rec in sorted(records, key=lambda r: r.utterance_id):
        if rec.speaker_id != speaker_id:
            continue
        rows.append(rec.raw)
        kinds.extend(rec.kinds)
    if not rows:
        raise ValueError(f"no records for speaker {speaker_id!r}")
    raw = np.concatenate(rows, axis=0)
    is_phone = np.array([k == "phone" for k in kinds])
    f0_vals = raw[is_phone & (raw[:, F0] > 0.0), F0]
    en_vals = raw[is_phone, ENERGY]
    dur_vals = raw[is_phone, DURATION]
    stats = SpeakerStats(
        speaker_id=speaker_id,
        f0=_population_stats(f0_vals),
        energy=_population_stats(en_vals),
        duration=_population_stats(dur_vals),
    )
    stats.stats_version = _stats_digest([stats])
    return stats


def _stats_payload(stats: SpeakerStats) -> dict:
    return {
        "speaker_id": stats.speaker_id,
        **{name: {"mean": st.mean, "std": st.std, "count": st.count}
           for name, st in zip(FEATURE_NAMES, (stats.f0, stats.energy, stats.duration))},
    }


def _stats_digest(all_stats: list[SpeakerStats]) -> str:
    body = json.dumps([_stats_payload(s) for s in sorted(all_stats, key=lambda s: s.speaker_id)],
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(body.encode("utf-8")).hexdigest()[:16]


def stamp_stats_version(all_stats: list[SpeakerStats]) -> str:
    """Content-derived version shared by a set of speaker stats."""
    version = _stats_digest(all_stats)
    for s in all_stats:
        s.stats_version = version
    return version


def save_speaker_stats(path, all_stats: list[SpeakerStats]):
    version = stamp_stats_version(all_stats)
    doc = {"stats_version": version,
           "speakers": {s.speaker_id: _stats_payload(s) for s in all_stats}}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_speaker_stats(path) -> dict[str, SpeakerStats]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    version = doc["stats_version"]
    out = {}
    for spk, body in doc["speakers"].items():
        out[spk] = SpeakerStats(
            speaker_id=spk,
            f0=FeatureStats(**body["f0"]),
            energy=FeatureStats(**body["energy"]),
            duration=FeatureStats(**body["duration"]),
            stats_version=version,
        )
    return out


def _boundary_rows(features: PhoneFeatures, utt: Utterance | None,
                   boundary_mask=None) -> np.ndarray:
    if boundary_mask is not None:
        mask = np.asarray(boundary_mask, dtype=bool)
    elif utt is not None:
        mask = np.array(utt.boundary_mask())
    elif features.space == RAW:
        # boundary rows are all-zero in raw space; real phones have duration >= 1
        mask = features.values[:, DURATION] == 0.0
    else:
        mask = np.all(features.values == 0.0, axis=1)
    if len(mask) != len(features):
        raise ValueError("boundary mask length does not match feature count")
    return mask


def normalize(features: PhoneFeatures, stats: SpeakerStats, utt: Utterance | None = None,
              boundary_mask=None) -> PhoneFeatures:
    """z = (x - mean) / max(std, eps), with sentinel passthrough.

    Boundary rows stay (0, 0, 0); a raw F0 of 0 (unvoiced phone) maps to
    z = 0 rather than being z-scored.
    """
    if features.space != RAW:
        raise SpaceMismatchError("normalize() expects raw-space features")
    boundary = _boundary_rows(features, utt, boundary_mask)
    z = (features.values - stats.means()) / np.maximum(stats.stds(), STD_EPS)
    z[features.values[:, F0] == 0.0, F0] = 0.0
    z[boundary] = 0.0
    return PhoneFeatures(z, NORMALIZED, stats.stats_version)


def denormalize(features: PhoneFeatures, stats: SpeakerStats, utt: Utterance | None = None,
                boundary_mask=None) -> PhoneFeatures:
    """Inverse of :func:`normalize`, with the same sentinel conventions."""
    if features.space != NORMALIZED:
        raise SpaceMismatchError("denormalize() expects normalized-space features")
    if (features.stats_version is not None and stats.stats_version
            and features.stats_version != stats.stats_version):
        raise VersionMismatchError(
            f"features normalized with stats_version {features.stats_version!r}, "
            f"got stats {stats.stats_version!r}")
    boundary = _boundary_rows(features, utt, boundary_mask)
    x = features.values * np.maximum(stats.stds(), STD_EPS) + stats.means()
    x[features.values[:, F0] == 0.0, F0] = 0.0
    x[boundary] = 0.0
    return PhoneFeatures(x, RAW)

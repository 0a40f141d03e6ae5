"""Persisted per-utterance feature records.

JSON files with a format_version and a SHA-256 over the canonical payload
so corruption is detected on load. Floats survive the round trip exactly
(shortest-repr serialization).
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FORMAT_VERSION = "1"


class VersionError(ValueError):
    """format_version or stats_version does not match what the caller expects."""


class IntegrityError(ValueError):
    """Stored checksum does not match the payload."""


@dataclass
class FeatureRecord:
    utterance_id: str
    speaker_id: str
    symbols: list[str]                     # token symbols, parallel to the rows
    kinds: list[str]                       # token kinds, parallel to the rows
    raw: np.ndarray                        # (N, 3): f0 Hz, rms, duration frames
    normalized: np.ndarray | None = None   # (N, 3) in per-speaker z-units
    stats_version: str | None = None

    def __post_init__(self):
        self.raw = np.asarray(self.raw, dtype=np.float64)
        if len(self.symbols) != len(self.kinds):
            raise ValueError("symbols and kinds must have the same length")
        if self.raw.shape != (len(self.kinds), 3):
            raise ValueError(f"raw features shape {self.raw.shape} does not match "
                             f"{len(self.kinds)} tokens")
        if self.normalized is not None:
            self.normalized = np.asarray(self.normalized, dtype=np.float64)
            if self.normalized.shape != self.raw.shape:
                raise ValueError("normalized features must match raw shape")
            if not np.all(np.isfinite(self.normalized)):
                raise ValueError("normalized features must be finite")

    @property
    def n_tokens(self) -> int:
        return len(self.kinds)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureRecord):
            return NotImplemented
        same_norm = ((self.normalized is None and other.normalized is None)
                     or (self.normalized is not None and other.normalized is not None
                         and np.array_equal(self.normalized, other.normalized)))
        return (self.utterance_id == other.utterance_id
                and self.speaker_id == other.speaker_id
                and self.symbols == other.symbols
                and self.kinds == other.kinds
                and np.array_equal(self.raw, other.raw)
                and same_norm
                and self.stats_version == other.stats_version)


def _payload(record: FeatureRecord) -> dict:
    return {
        "utterance_id": record.utterance_id,
        "speaker_id": record.speaker_id,
        "symbols": record.symbols,
        "kinds": record.kinds,
        "raw": record.raw.tolist(),
        "normalized": None if record.normalized is None else record.normalized.tolist(),
        "stats_version": record.stats_version,
    }


def _digest(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_feature_record(path, record: FeatureRecord):
    """Atomic write (temp file + rename): safe with concurrent readers."""
    payload = _payload(record)
    doc = {"format_version": FORMAT_VERSION, "payload": payload, "sha256": _digest(payload)}
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_feature_record(path, expect_stats_version: str | None = None) -> FeatureRecord:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionError(f"{path}: format_version {version!r}, this build reads "
                           f"{FORMAT_VERSION!r}")
    payload = doc["payload"]
    if _digest(payload) != doc.get("sha256"):
        raise IntegrityError(f"{path}: checksum mismatch, file is corrupt")
    record = FeatureRecord(
        utterance_id=payload["utterance_id"],
        speaker_id=payload["speaker_id"],
        symbols=list(payload["symbols"]),
        kinds=list(payload["kinds"]),
        raw=np.array(payload["raw"], dtype=np.float64).reshape(len(payload["kinds"]), 3),
        normalized=(None if payload["normalized"] is None
                    else np.array(payload["normalized"], dtype=np.float64)),
        stats_version=payload["stats_version"],
    )
    if expect_stats_version is not None and record.stats_version != expect_stats_version:
        raise VersionError(f"{path}: stats_version {record.stats_version!r} is stale, "
                           f"current is {expect_stats_version!r}")
    return record

"""Edit scripts over normalized per-phone features.

Edits live in per-speaker z-space, where adding k is the same as adding
k standard deviations in raw units. Boundary tokens are never modified;
duration edits are clamped so the denormalized value stays at or above
one frame.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from prosoctl.corpus.alignment import Utterance
from prosoctl.features import (DURATION, FEATURE_NAMES, NORMALIZED, STD_EPS,
                               PhoneFeatures, SpeakerStats, VersionMismatchError)
from prosoctl.seeds import rng_for

ALL_PHONES = "all_phones"
PHONE_INDICES = "phone_indices"
STRESSED_VOWELS_RANDOM = "stressed_vowels_random"

SHIFT_SIGMA = "shift_sigma"
SET_NORMALIZED = "set_normalized"
SCALE_RAW = "scale_raw"


class EditError(ValueError):
    """Selector or action cannot be applied to this utterance."""


@dataclass(frozen=True)
class EditOp:
    feature: str                      # f0 | energy | duration
    action: str                       # shift_sigma | set_normalized | scale_raw
    amount: float
    selector: str = ALL_PHONES
    indices: tuple[int, ...] = ()     # for phone_indices
    fraction: float = 1.0             # for stressed_vowels_random
    seed: int = 0

    def __post_init__(self):
        if self.feature not in FEATURE_NAMES:
            raise EditError(f"unknown feature {self.feature!r}, expected one of "
                            f"{FEATURE_NAMES}")
        if self.action not in (SHIFT_SIGMA, SET_NORMALIZED, SCALE_RAW):
            raise EditError(f"unknown action {self.action!r}")
        if self.selector not in (ALL_PHONES, PHONE_INDICES, STRESSED_VOWELS_RANDOM):
            raise EditError(f"unknown selector {self.selector!r}")
        if self.selector == STRESSED_VOWELS_RANDOM and not (0.0 < self.fraction <= 1.0):
            raise EditError(f"fraction must be in (0, 1], got {self.fraction}")

    def to_doc(self) -> dict:
        if self.selector == PHONE_INDICES:
            selector = {PHONE_INDICES: sorted(self.indices)}
        elif self.selector == STRESSED_VOWELS_RANDOM:
            selector = {STRESSED_VOWELS_RANDOM: {"fraction": self.fraction, "seed": self.seed}}
        else:
            selector = ALL_PHONES
        return {"selector": selector, "feature": self.feature,
                "action": {self.action: self.amount}}

    @classmethod
    def from_doc(cls, doc: dict) -> "EditOp":
        action_doc = doc["action"]
        if len(action_doc) != 1:
            raise EditError(f"action must have exactly one entry, got {action_doc}")
        action, amount = next(iter(action_doc.items()))
        sel = doc["selector"]
        if sel == ALL_PHONES:
            return cls(doc["feature"], action, float(amount))
        if PHONE_INDICES in sel:
            return cls(doc["feature"], action, float(amount), selector=PHONE_INDICES,
                       indices=tuple(int(i) for i in sel[PHONE_INDICES]))
        if STRESSED_VOWELS_RANDOM in sel:
            body = sel[STRESSED_VOWELS_RANDOM]
            return cls(doc["feature"], action, float(amount),
                       selector=STRESSED_VOWELS_RANDOM,
                       fraction=float(body["fraction"]), seed=int(body.get("seed", 0)))
        raise EditError(f"unknown selector document {sel!r}")


@dataclass
class EditScript:
    ops: list[EditOp] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {"ops": [op.to_doc() for op in self.ops], "meta": self.meta}

    @classmethod
    def from_doc(cls, doc: dict) -> "EditScript":
        return cls(ops=[EditOp.from_doc(d) for d in doc.get("ops", [])],
                   meta=dict(doc.get("meta", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "EditScript":
        return cls.from_doc(json.loads(text))

    def save(self, path):
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "EditScript":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def select_stressed_vowel_subset(utt: Utterance, fraction: float, seed: int) -> list[int]:
    """Deterministic random subset of the stressed (vowel) token indices.

    Size is max(1, round(fraction * count)); same seed, same subset.
    """
    if not (0.0 < fraction <= 1.0):
        raise EditError(f"fraction must be in (0, 1], got {fraction}")
    stressed = [i for i, tok in enumerate(utt.phones)
                if not tok.is_boundary and tok.stressed]
    if not stressed:
        raise EditError(f"utterance {utt.utterance_id!r} has no stressed vowels")
    size = max(1, int(np.floor(fraction * len(stressed) + 0.5)))
    rng = rng_for(seed, "stressed-subset", utt.utterance_id)
    chosen = rng.choice(len(stressed), size=size, replace=False)
    return sorted(stressed[i] for i in chosen)


def _resolve_selector(op: EditOp, utt: Utterance, n: int) -> list[int]:
    boundary = utt.boundary_mask()
    if op.selector == ALL_PHONES:
        return [i for i in range(n) if not boundary[i]]
    if op.selector == PHONE_INDICES:
        for i in op.indices:
            if not 0 <= i < n:
                raise EditError(f"phone index {i} out of range (utterance has {n} tokens)")
        return sorted(i for i in op.indices if not boundary[i])
    return select_stressed_vowel_subset(utt, op.fraction, op.seed)


def duration_floor_z(stats: SpeakerStats) -> float:
    """z-value at which the denormalized duration is exactly one frame."""
    return (1.0 - stats.duration.mean) / max(stats.duration.std, STD_EPS)


def apply_edits(features: PhoneFeatures, script: EditScript, utt: Utterance,
                stats: SpeakerStats) -> PhoneFeatures:
    """Apply the script in order; non-selected phones stay bit-identical."""
    if features.space != NORMALIZED:
        raise EditError("apply_edits expects normalized features")
    if len(features) != len(utt.phones):
        raise EditError(f"feature count {len(features)} does not match "
                        f"{len(utt.phones)} tokens")
    if (features.stats_version is not None and stats.stats_version
            and features.stats_version != stats.stats_version):
        raise VersionMismatchError(
            f"features carry stats_version {features.stats_version!r}, "
            f"stats are {stats.stats_version!r}")
    out = features.copy()
    values = out.values
    for op in script.ops:
        j = FEATURE_NAMES.index(op.feature)
        sel = _resolve_selector(op, utt, len(values))
        st = stats.by_index(j)
        for i in sel:
            old = values[i, j]
            if op.action == SHIFT_SIGMA:
                new = old + op.amount
            elif op.action == SET_NORMALIZED:
                new = op.amount
            else:  # scale_raw, translated through raw space
                raw = old * max(st.std, STD_EPS) + st.mean
                if j == 0 and old == 0.0:
                    raw = 0.0  # unvoiced sentinel scales to itself
                new = (raw * op.amount - st.mean) / max(st.std, STD_EPS)
            # the floor guards edited values only; an op that leaves the value
            # untouched (shift 0) must stay a bit-exact identity
            if j == DURATION and new != old:
                new = max(new, duration_floor_z(stats))
            values[i, j] = new
    return out

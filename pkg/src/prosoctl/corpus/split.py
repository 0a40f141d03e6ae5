"""Deterministic per-speaker train/validation splits."""

from __future__ import annotations

import math
from collections import defaultdict

from prosoctl.corpus.alignment import Utterance
from prosoctl.seeds import rng_for


def split_corpus(utterances: list[Utterance], holdout_fraction: float,
                 seed: int) -> tuple[list[Utterance], list[Utterance]]:
    """Hold out `holdout_fraction` of each speaker's utterances for validation.

    Deterministic for a fixed seed; every speaker keeps at least one
    training utterance. Speakers with a single utterance are rejected
    (they cannot be represented on both sides).
    """
    if not 0.0 <= holdout_fraction < 1.0:
        raise ValueError(f"holdout_fraction must be in [0, 1), got {holdout_fraction}")
    by_speaker: dict[str, list[Utterance]] = defaultdict(list)
    for utt in utterances:
        by_speaker[utt.speaker_id].append(utt)
    for spk, utts in by_speaker.items():
        if len(utts) < 2:
            raise ValueError(f"speaker {spk!r} has only {len(utts)} utterance; "
                             f"need >= 2 to appear in both train and validation")

    train, valid = [], []
    for spk in sorted(by_speaker):
        utts = sorted(by_speaker[spk], key=lambda u: u.utterance_id)
        n_hold = int(math.floor(holdout_fraction * len(utts) + 0.5))
        n_hold = min(n_hold, len(utts) - 1)
        order = rng_for(seed, "split", spk).permutation(len(utts))
        held = set(order[:n_hold].tolist())
        for i, utt in enumerate(utts):
            (valid if i in held else train).append(utt)
    return train, valid

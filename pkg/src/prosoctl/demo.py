"""Synthetic desk-scale corpus: planned features rendered to WAV + alignments.

The generator plans per-phone features with structure the predictor can
learn (declination, stress bumps, symbol-class durations) plus small
seeded jitter, renders them with the built-in timbre table, and writes
one WAV and one alignment JSON per utterance. Extraction then measures
the rendered audio, closing the loop for every experiment.

Runnable directly: ``python3 -m prosoctl.demo out_dir --utterances 12``.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from prosoctl.corpus.alignment import save_alignment
from prosoctl.corpus.alignment import PhoneToken, Utterance
from prosoctl.dsp.audio import write_wav
from prosoctl.features import PhoneFeatures
from prosoctl.seeds import rng_for
from prosoctl.synth.render import SynthConfig, synthesize

VOWELS = ("a", "e", "i", "o", "u")
CONSONANTS = ("m", "n", "l", "s", "r")
SPEAKER_BASE_F0 = {"spk_f": 205.0, "spk_m": 132.0}

_DUR_BASE = {"a": 13.0, "e": 12.0, "i": 11.0, "o": 13.0, "u": 12.0,
             "m": 8.0, "n": 8.0, "l": 7.0, "s": 10.0, "r": 7.0}
_ENERGY_BASE = {"a": 0.115, "e": 0.105, "i": 0.095, "o": 0.11, "u": 0.1,
                "m": 0.07, "n": 0.07, "l": 0.08, "s": 0.055, "r": 0.08}


@dataclass
class DemoUtterance:
    utterance: Utterance          # aligned (realized) version
    features: PhoneFeatures       # planned raw features
    wav_path: Path
    alignment_path: Path


def plan_utterance(utt_id: str, speaker: str, seed: int) -> tuple[Utterance, PhoneFeatures]:
    """Random word structure with planned raw features."""
    rng = rng_for(seed, "plan", utt_id)
    n_words = int(rng.integers(2, 5))
    tokens: list[PhoneToken] = []
    for w in range(n_words):
        if w > 0:
            tokens.append(PhoneToken("<wb>", kind="word_boundary"))
        n_phones = int(rng.integers(2, 5))
        stressed_slot = int(rng.integers(n_phones))
        for p in range(n_phones):
            if rng.random() < 0.55:
                symbol = VOWELS[int(rng.integers(len(VOWELS)))]
                stressed = p == stressed_slot
            else:
                symbol = CONSONANTS[int(rng.integers(len(CONSONANTS)))]
                stressed = False
            tokens.append(PhoneToken(symbol, stressed=stressed))
    if not any(t.stressed for t in tokens):
        for i, t in enumerate(tokens):
            if t.symbol in VOWELS:
                tokens[i] = PhoneToken(t.symbol, stressed=True)
                break
        else:
            tokens.append(PhoneToken("a", stressed=True))

    base_f0 = SPEAKER_BASE_F0[speaker]
    n = len(tokens)
    rows = np.zeros((n, 3))
    phone_pos = 0
    n_phones_total = sum(1 for t in tokens if not t.is_boundary)
    for i, tok in enumerate(tokens):
        if tok.is_boundary:
            continue
        declination = 1.0 - 0.12 * phone_pos / max(1, n_phones_total - 1)
        stress_bump = 1.12 if tok.stressed else 1.0
        jitter = 1.0 + rng.normal(0.0, 0.02)
        f0 = base_f0 * declination * stress_bump * jitter
        dur = _DUR_BASE[tok.symbol] + (2.5 if tok.stressed else 0.0) + rng.normal(0.0, 1.2)
        energy = _ENERGY_BASE[tok.symbol] * (1.18 if tok.stressed else 1.0) \
            * (1.0 + rng.normal(0.0, 0.08))
        rows[i] = (f0, max(0.02, energy), float(np.clip(round(dur), 5, 20)))
        phone_pos += 1
    utt = Utterance(utterance_id=utt_id, speaker_id=speaker, phones=tokens)
    return utt, PhoneFeatures(rows)


def make_demo_corpus(out_dir, n_utterances: int = 20, seed: int = 7,
                     speakers=tuple(SPEAKER_BASE_F0), cfg: SynthConfig | None = None,
                     ) -> list[DemoUtterance]:
    out_dir = Path(out_dir)
    (out_dir / "wav").mkdir(parents=True, exist_ok=True)
    (out_dir / "align").mkdir(parents=True, exist_ok=True)
    cfg = cfg or SynthConfig(seed=rng_for(seed, "corpus-noise").integers(2 ** 31))
    out = []
    for k in range(n_utterances):
        speaker = speakers[k % len(speakers)]
        utt_id = f"{speaker}_{k:03d}"
        utt, feats = plan_utterance(utt_id, speaker, seed)
        rend = synthesize(utt, feats, cfg)
        wav_path = out_dir / "wav" / f"{utt_id}.wav"
        align_path = out_dir / "align" / f"{utt_id}.json"
        write_wav(wav_path, rend.audio)
        realized = rend.realized.with_audio(str(wav_path), rend.grid.n_frames)
        save_alignment(align_path, realized)
        out.append(DemoUtterance(utterance=realized, features=feats,
                                 wav_path=wav_path, alignment_path=align_path))
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Generate the synthetic demo corpus.")
    parser.add_argument("out_dir")
    parser.add_argument("--utterances", type=int, default=20)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    made = make_demo_corpus(args.out_dir, n_utterances=args.utterances, seed=args.seed)
    print(f"wrote {len(made)} utterances under {args.out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

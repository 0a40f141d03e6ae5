"""Closed-loop experiments: predict, edit, synthesize, re-measure.

Each experiment reports, per shift level and measured feature, the mean
and standard deviation across utterances of the change against the
unshifted rendition of the same pipeline. At shift 0 the pipeline is
bit-identical, so deltas there are exactly zero.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from prosoctl.afp.model import AfpCheckpoint, AfpDims, afp_forward
from prosoctl.afp.train import TrainConfig, afp_train
from prosoctl.control import (ALL_PHONES, PHONE_INDICES, EditOp, EditScript,
                              apply_edits, duration_floor_z,
                              select_stressed_vowel_subset)
from prosoctl.corpus.alignment import Utterance
from prosoctl.corpus.store import FeatureRecord
from prosoctl.dsp.pitch import F0Config
from prosoctl.eval.measures import measure_rendition, utterance_level
from prosoctl.features import (DURATION, FEATURE_NAMES, PhoneFeatures, SpeakerStats,
                               denormalize)
from prosoctl.seeds import derive_seed
from prosoctl.synth.render import Rendition, SynthConfig, synthesize

DEFAULT_GRID = (-0.5, -0.25, 0.0, 0.25, 0.5)


@dataclass
class ShiftStats:
    mean: float
    std: float
    n: int


@dataclass
class ExperimentReport:
    kind: str
    feature: str                                   # the edited feature
    grid: list[float]
    # measured feature -> shift -> stats; for temporal runs the outer key is
    # "<group>/<measured feature>" with group in {modified, unmodified}
    deltas: dict[str, dict[float, ShiftStats]]
    baselines: dict[str, float]                    # measured feature -> mean base value
    seeds: list[int] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {
            "kind": self.kind,
            "feature": self.feature,
            "grid": list(self.grid),
            "deltas": {k: {repr(s): vars(st) for s, st in by_shift.items()}
                       for k, by_shift in self.deltas.items()},
            "baselines": self.baselines,
            "seeds": self.seeds,
            "flags": self.flags,
            "config": self.config,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ExperimentReport":
        deltas = {k: {float(s): ShiftStats(**st) for s, st in by_shift.items()}
                  for k, by_shift in doc["deltas"].items()}
        return cls(kind=doc["kind"], feature=doc["feature"], grid=list(doc["grid"]),
                   deltas=deltas, baselines=dict(doc["baselines"]),
                   seeds=list(doc.get("seeds", [])), flags=list(doc.get("flags", [])),
                   config=dict(doc.get("config", {})))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_doc(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ExperimentReport":
        return cls.from_doc(json.loads(Path(path).read_text(encoding="utf-8")))

    def save_csv(self, path):
        """Flat (shift, measured_feature, mean, std) rows for external plotting."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["shift", "measured", "mean", "std", "n"])
            for measured, by_shift in sorted(self.deltas.items()):
                for shift in sorted(by_shift):
                    st = by_shift[shift]
                    writer.writerow([shift, measured, st.mean, st.std, st.n])


def prepare_raw_for_synthesis(normalized: PhoneFeatures, stats: SpeakerStats,
                              utt: Utterance) -> PhoneFeatures:
    """Denormalize and floor durations at one frame so synthesis stays valid."""
    raw = denormalize(normalized, stats, utt=utt)
    for i, tok in enumerate(utt.phones):
        if not tok.is_boundary:
            raw.values[i, DURATION] = max(raw.values[i, DURATION], 1.0)
    return raw


def predict_and_render(utt: Utterance, ckpt: AfpCheckpoint, stats: SpeakerStats,
                       cfg: SynthConfig, script: EditScript | None = None) -> Rendition:
    pred = afp_forward(ckpt, utt.phones, utt.speaker_id)
    if script is not None and script.ops:
        pred = apply_edits(pred, script, utt, stats)
    raw = prepare_raw_for_synthesis(pred, stats, utt)
    return synthesize(utt, raw, cfg)


def _collect(deltas_by_key: dict[str, dict[float, list[float]]]) -> dict:
    out = {}
    for key, by_shift in deltas_by_key.items():
        out[key] = {shift: ShiftStats(mean=float(np.mean(vals)),
                                      std=float(np.std(vals)), n=len(vals))
                    for shift, vals in by_shift.items()}
    return out


def run_disentanglement(utterances: list[Utterance], ckpt: AfpCheckpoint,
                        stats_by_speaker: dict[str, SpeakerStats], cfg: SynthConfig,
                        grid=DEFAULT_GRID, feature: str = "f0",
                        f0_cfg: F0Config = F0Config()) -> ExperimentReport:
    """Whole-contour sigma-fraction shifts; utterance-level deltas."""
    if not utterances:
        raise ValueError("empty evaluation corpus")
    grid = sorted(float(g) for g in grid)
    flags = []
    if feature == "duration" and min(grid) < -0.25:
        flags.append("duration shifts below -0.25 sigma are clamped at the "
                      "one-frame floor, not dropped")
    utterances = sorted(utterances, key=lambda u: u.utterance_id)
    deltas: dict[str, dict[float, list[float]]] = {
        m: {s: [] for s in grid} for m in FEATURE_NAMES}
    baselines = {m: [] for m in FEATURE_NAMES}
    clamp_hits = 0
    for utt in utterances:
        stats = stats_by_speaker[utt.speaker_id]
        base = predict_and_render(utt, ckpt, stats, cfg)
        base_level = utterance_level(base, f0_cfg)
        for m in FEATURE_NAMES:
            baselines[m].append(base_level[m])
        floor = duration_floor_z(stats)
        for shift in grid:
            if shift == 0.0:
                for m in FEATURE_NAMES:
                    deltas[m][shift].append(0.0)
                continue
            script = EditScript([EditOp(feature, "shift_sigma", shift)])
            pred = afp_forward(ckpt, utt.phones, utt.speaker_id)
            edited = apply_edits(pred, script, utt, stats)
            if feature == "duration" and np.any(np.isclose(edited.values[:, DURATION], floor)):
                clamp_hits += 1
            rend = synthesize(utt, prepare_raw_for_synthesis(edited, stats, utt), cfg)
            level = utterance_level(rend, f0_cfg)
            for m in FEATURE_NAMES:
                deltas[m][shift].append(level[m] - base_level[m])
    if clamp_hits:
        flags.append(f"duration floor engaged in {clamp_hits} shifted renditions")
    return ExperimentReport(
        kind="disentanglement", feature=feature, grid=list(grid),
        deltas=_collect(deltas),
        baselines={m: float(np.mean(v)) for m, v in baselines.items()},
        flags=flags,
        config={"n_utterances": len(utterances), "synth_seed": cfg.seed},
    )


def run_temporal_precision(utterances: list[Utterance], ckpt: AfpCheckpoint,
                           stats_by_speaker: dict[str, SpeakerStats], cfg: SynthConfig,
                           grid=DEFAULT_GRID, feature: str = "f0",
                           fraction: float = 0.5, seed: int = 0,
                           f0_cfg: F0Config = F0Config()) -> ExperimentReport:
    """Shift only a random subset of stressed vowels; per-phone group deltas."""
    if not utterances:
        raise ValueError("empty evaluation corpus")
    grid = sorted(float(g) for g in grid)
    utterances = sorted(utterances, key=lambda u: u.utterance_id)
    keys = [f"{group}/{m}" for group in ("modified", "unmodified") for m in FEATURE_NAMES]
    deltas: dict[str, dict[float, list[float]]] = {k: {s: [] for s in grid} for k in keys}
    baselines = {k: [] for k in keys}
    for utt in utterances:
        stats = stats_by_speaker[utt.speaker_id]
        selected = select_stressed_vowel_subset(utt, fraction, seed)
        others = [i for i, tok in enumerate(utt.phones)
                  if not tok.is_boundary and i not in selected]
        base = predict_and_render(utt, ckpt, stats, cfg)
        base_phone = measure_rendition(base, f0_cfg).values
        groups = {"modified": selected, "unmodified": others}
        for group, idx in groups.items():
            if not idx:
                continue
            for j, m in enumerate(FEATURE_NAMES):
                baselines[f"{group}/{m}"].append(float(base_phone[idx, j].mean()))
        for shift in grid:
            if shift == 0.0:
                for k in keys:
                    deltas[k][shift].append(0.0)
                continue
            script = EditScript([EditOp(feature, "shift_sigma", shift,
                                        selector=PHONE_INDICES, indices=tuple(selected))])
            rend = predict_and_render(utt, ckpt, stats, cfg, script)
            phone = measure_rendition(rend, f0_cfg).values
            for group, idx in groups.items():
                if not idx:
                    continue
                for j, m in enumerate(FEATURE_NAMES):
                    delta = float(phone[idx, j].mean() - base_phone[idx, j].mean())
                    deltas[f"{group}/{m}"][shift].append(delta)
    return ExperimentReport(
        kind="temporal_precision", feature=feature, grid=list(grid),
        deltas=_collect(deltas),
        baselines={k: float(np.mean(v)) for k, v in baselines.items() if v},
        seeds=[seed],
        config={"fraction": fraction, "n_utterances": len(utterances),
                "synth_seed": cfg.seed},
    )


@dataclass
class ReproducibilityResult:
    reports: dict[int, ExperimentReport]
    divergence: dict[str, float]   # measured feature -> max over shifts/seed pairs
    feature: str
    grid: list[float]

    def to_doc(self) -> dict:
        return {"feature": self.feature, "grid": self.grid,
                "divergence": self.divergence,
                "reports": {str(s): r.to_doc() for s, r in self.reports.items()}}

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_doc(), indent=1) + "\n", encoding="utf-8")


def run_reproducibility(train_records: list[FeatureRecord], utterances: list[Utterance],
                        stats_by_speaker: dict[str, SpeakerStats], cfg: SynthConfig,
                        train_cfg: TrainConfig, seeds: list[int], grid=DEFAULT_GRID,
                        feature: str = "f0", dims: AfpDims = AfpDims(),
                        f0_cfg: F0Config = F0Config()) -> ReproducibilityResult:
    """Retrain per seed, re-run the shift analysis, summarize curve spread."""
    if len(seeds) < 2:
        raise ValueError("need at least 2 seeds")
    reports = {}
    for seed in seeds:
        seed_cfg = TrainConfig(**{**vars(train_cfg), "seed": seed})
        try:
            ckpt, _ = afp_train(train_records, seed_cfg, dims=dims)
        except Exception as exc:
            raise RuntimeError(f"training failed for seed {seed}: {exc}") from exc
        report = run_disentanglement(utterances, ckpt, stats_by_speaker, cfg,
                                     grid=grid, feature=feature, f0_cfg=f0_cfg)
        report.seeds = [seed]
        reports[seed] = report
    divergence = {}
    for m in FEATURE_NAMES:
        worst = 0.0
        for i, sa in enumerate(seeds):
            for sb in seeds[i + 1:]:
                for shift in reports[sa].deltas[m]:
                    worst = max(worst, abs(reports[sa].deltas[m][shift].mean
                                           - reports[sb].deltas[m][shift].mean))
        divergence[m] = worst
    return ReproducibilityResult(reports=reports, divergence=divergence,
                                 feature=feature, grid=sorted(float(g) for g in grid))

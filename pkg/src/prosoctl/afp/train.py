"""L1-loss training of the predictor with Adam, one utterance per step."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from prosoctl.afp.model import (AfpCheckpoint, AfpDims, backward_core, embedding_grads,
                                encode_tokens, forward_core, init_checkpoint)
from prosoctl.corpus.alignment import PHONE, PhoneToken
from prosoctl.corpus.store import FeatureRecord
from prosoctl.seeds import rng_for


class TrainingDivergedError(RuntimeError):
    def __init__(self, iteration: int, utterance_id: str):
        super().__init__(f"non-finite loss at iteration {iteration} "
                         f"on utterance {utterance_id!r}")
        self.iteration = iteration
        self.utterance_id = utterance_id


@dataclass(frozen=True)
class TrainConfig:
    # 1e-3 converges too slowly to memorize desk-scale corpora within a
    # 5k-iteration budget; 2e-3 is reliable there and still stable
    learning_rate: float = 2e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_iterations: int = 5000
    seed: int = 0
    clip_norm: float = 5.0
    log_every: int = 50

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and self.eps > 0):
            raise ValueError("invalid Adam parameters")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def afp_loss(predicted: np.ndarray, target: np.ndarray, mask=None):
    """Mean absolute error over unmasked token-components.

    Returns (loss, dloss/dpredicted). mask is per token; masked-out tokens
    contribute nothing, exactly.
    """
    predicted = np.asarray(predicted, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if predicted.shape != target.shape:
        raise ValueError(f"shape mismatch: {predicted.shape} vs {target.shape}")
    if mask is None:
        mask = np.ones(len(predicted), dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    n = int(mask.sum())
    if n == 0:
        raise ValueError("all tokens are masked out of the loss")
    diff = predicted - target
    loss = float(np.abs(diff[mask]).sum() / (n * predicted.shape[1]))
    dpred = np.zeros_like(predicted)
    dpred[mask] = np.sign(diff[mask]) / (n * predicted.shape[1])
    return loss, dpred


class Adam:
    def __init__(self, params: dict[str, np.ndarray], cfg: TrainConfig):
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        cfg = self.cfg
        norm = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
        scale = cfg.clip_norm / norm if (cfg.clip_norm > 0 and norm > cfg.clip_norm) else 1.0
        self.t += 1
        bc1 = 1.0 - cfg.beta1 ** self.t
        bc2 = 1.0 - cfg.beta2 ** self.t
        for k, g in grads.items():
            g = g * scale
            self.m[k] = cfg.beta1 * self.m[k] + (1.0 - cfg.beta1) * g
            self.v[k] = cfg.beta2 * self.v[k] + (1.0 - cfg.beta2) * (g * g)
            update = (self.m[k] / bc1) / (np.sqrt(self.v[k] / bc2) + cfg.eps)
            params[k] -= cfg.learning_rate * update


def tokens_of(record: FeatureRecord) -> list[PhoneToken]:
    return [PhoneToken(symbol=s, kind=k) for s, k in zip(record.symbols, record.kinds)]


def train_step(ckpt: AfpCheckpoint, opt: Adam, record: FeatureRecord,
               mask=None) -> float:
    tokens = tokens_of(record)
    x, sym_idx, spk_idx = encode_tokens(ckpt, tokens, record.speaker_id)
    pred, cache = forward_core(ckpt.params, ckpt.dims, x)
    loss, dpred = afp_loss(pred, record.normalized, mask)
    dx, grads = backward_core(ckpt.params, ckpt.dims, cache, dpred)
    grads.update(embedding_grads(ckpt, dx, sym_idx, spk_idx))
    opt.step(ckpt.params, grads)
    return loss


def evaluate_loss(ckpt: AfpCheckpoint, records: list[FeatureRecord]) -> float:
    """Mean L1 over all records at the current weights (no updates)."""
    total = 0.0
    count = 0
    for rec in sorted(records, key=lambda r: r.utterance_id):
        tokens = tokens_of(rec)
        x, _, _ = encode_tokens(ckpt, tokens, rec.speaker_id)
        pred, _ = forward_core(ckpt.params, ckpt.dims, x)
        loss, _ = afp_loss(pred, rec.normalized)
        total += loss * len(tokens)
        count += len(tokens)
    return total / count


def afp_train(records: list[FeatureRecord], cfg: TrainConfig,
              dims: AfpDims = AfpDims()) -> tuple[AfpCheckpoint, list[tuple[int, float]]]:
    """Train from scratch on the records; deterministic for a fixed seed.

    Records must carry normalized features. One utterance per iteration,
    order reshuffled every epoch from the seed. Returns the checkpoint
    and the (iteration, loss) trace.
    """
    if not records:
        raise ValueError("empty training set")
    for rec in records:
        if rec.normalized is None:
            raise ValueError(f"record {rec.utterance_id!r} has no normalized features; "
                             f"compute speaker stats first")
    records = sorted(records, key=lambda r: r.utterance_id)
    symbols = sorted({s for r in records for s in r.symbols})
    speakers = sorted({r.speaker_id for r in records})
    versions = {r.stats_version for r in records}
    stats_version = versions.pop() if len(versions) == 1 else None

    ckpt = init_checkpoint(symbols, speakers, seed=cfg.seed, dims=dims,
                           stats_version=stats_version)
    opt = Adam(ckpt.params, cfg)
    trace = []
    it = 0
    epoch = 0
    while it < cfg.max_iterations:
        order = rng_for(cfg.seed, "shuffle", epoch).permutation(len(records))
        for idx in order:
            if it >= cfg.max_iterations:
                break
            rec = records[idx]
            loss = train_step(ckpt, opt, rec)
            it += 1
            if not np.isfinite(loss):
                raise TrainingDivergedError(it, rec.utterance_id)
            if it % cfg.log_every == 0 or it == 1 or it == cfg.max_iterations:
                trace.append((it, loss))
        epoch += 1
    ckpt.iteration = it
    return ckpt, trace

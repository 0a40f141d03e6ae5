"""Finite-difference validation of the hand-written backward pass."""

from __future__ import annotations

import numpy as np

from prosoctl.afp.model import (AfpCheckpoint, AfpDims, backward_core, embedding_grads,
                                encode_tokens, forward_core, init_checkpoint)
from prosoctl.afp.train import afp_loss
from prosoctl.corpus.alignment import PHONE, PhoneToken
from prosoctl.seeds import rng_for

TOY_DIMS = AfpDims(phone_dim=5, speaker_dim=2, block1_hidden=3, block2_hidden=2, dense_dim=3)


def make_toy_case(seed: int, n_tokens: int = 5, vocab: int = 5,
                  dims: AfpDims = TOY_DIMS, kink_margin: float = 1e-3):
    """Random tiny model + batch whose L1 terms stay away from the kink.

    Targets are re-offset until every |predicted - target| exceeds the
    margin, so the loss is differentiable at the evaluation point.
    """
    rng = rng_for(seed, "gradcheck")
    symbols = [f"p{i}" for i in range(vocab)]
    ckpt = init_checkpoint(symbols, ["spk"], seed=int(rng.integers(2 ** 31)), dims=dims)
    tokens = [PhoneToken(symbols[int(rng.integers(vocab))], PHONE) for _ in range(n_tokens)]
    x, sym_idx, spk_idx = encode_tokens(ckpt, tokens, "spk")
    pred, _ = forward_core(ckpt.params, ckpt.dims, x)
    for attempt in range(50):
        target = pred + rng.uniform(-0.5, 0.5, size=pred.shape)
        if np.all(np.abs(pred - target) > kink_margin):
            break
    else:
        raise RuntimeError("could not find a kink-free target")
    return ckpt, tokens, target


def analytic_gradients(ckpt: AfpCheckpoint, tokens, target, speaker_id="spk"):
    x, sym_idx, spk_idx = encode_tokens(ckpt, tokens, speaker_id)
    pred, cache = forward_core(ckpt.params, ckpt.dims, x)
    loss, dpred = afp_loss(pred, target)
    dx, grads = backward_core(ckpt.params, ckpt.dims, cache, dpred)
    grads.update(embedding_grads(ckpt, dx, sym_idx, spk_idx))
    return loss, grads


def loss_at(ckpt: AfpCheckpoint, tokens, target, speaker_id="spk") -> float:
    x, _, _ = encode_tokens(ckpt, tokens, speaker_id)
    pred, _ = forward_core(ckpt.params, ckpt.dims, x)
    loss, _ = afp_loss(pred, target)
    return loss


def gradient_check(ckpt: AfpCheckpoint, tokens, target, epsilon: float = 1e-5,
                   speaker_id: str = "spk") -> float:
    """Max relative error of analytic vs central-difference gradients.

    Every coordinate of every parameter tensor is perturbed. The relative
    error denominator is floored at 1e-6: below that scale the central
    difference is dominated by float64 cancellation noise (~1e-12 for
    losses of order 1), so near-zero gradients are compared absolutely.
    """
    _, grads = analytic_gradients(ckpt, tokens, target, speaker_id)
    worst = 0.0
    for name, tensor in ckpt.params.items():
        flat = tensor.reshape(-1)
        gflat = grads[name].reshape(-1)
        for j in range(flat.size):
            keep = flat[j]
            flat[j] = keep + epsilon
            up = loss_at(ckpt, tokens, target, speaker_id)
            flat[j] = keep - epsilon
            down = loss_at(ckpt, tokens, target, speaker_id)
            flat[j] = keep
            fd = (up - down) / (2.0 * epsilon)
            err = abs(gflat[j] - fd) / max(abs(gflat[j]) + abs(fd), 1e-6)
            worst = max(worst, err)
    return worst


def gradient_check_random_configs(n_configs: int = 20, seed: int = 0,
                                  epsilon: float = 1e-5) -> float:
    """Worst relative error over randomized small configurations."""
    worst = 0.0
    for k in range(n_configs):
        rng = rng_for(seed, "gradcheck-config", k)
        ckpt, tokens, target = make_toy_case(seed=int(rng.integers(2 ** 31)),
                                             n_tokens=int(rng.integers(3, 7)))
        worst = max(worst, gradient_check(ckpt, tokens, target, epsilon=epsilon))
    return worst

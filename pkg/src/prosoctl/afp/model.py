"""The predictor network and its hand-written forward/backward passes.

Per-token inputs are learned phone + speaker embeddings. The trunk is two
stacked blocks of 2-layer bidirectional LSTMs (hidden sizes are per
direction; outputs concatenate both directions), followed by a dense
layer, tanh, and a linear projection to the 3 feature dimensions.

Everything is float64 numpy; the backward pass is validated against
central finite differences (see gradcheck).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from prosoctl.corpus.alignment import PhoneToken
from prosoctl.features import NORMALIZED, PhoneFeatures

FORMAT_VERSION = "1"
UNK = "<unk>"
N_OUT = 3


class UnknownSpeakerError(KeyError):
    """Speaker has no embedding row in the checkpoint."""


class CheckpointError(ValueError):
    """Checkpoint file failed version or shape validation."""


@dataclass(frozen=True)
class AfpDims:
    phone_dim: int = 64
    speaker_dim: int = 16
    block1_hidden: int = 32   # per direction; block output is 2x this
    block2_hidden: int = 16
    dense_dim: int = 16

    @property
    def input_dim(self) -> int:
        return self.phone_dim + self.speaker_dim

    def layer_plan(self) -> list[tuple[int, int]]:
        """(input_dim, hidden_per_direction) for the 4 BiLSTM layers."""
        h1, h2 = self.block1_hidden, self.block2_hidden
        return [
            (self.input_dim, h1), (2 * h1, h1),   # block 1
            (2 * h1, h2), (2 * h2, h2),           # block 2
        ]


@dataclass
class AfpCheckpoint:
    params: dict[str, np.ndarray]
    symbols: list[str]            # row order of the phone embedding; [0] == UNK
    speakers: list[str]
    dims: AfpDims
    seed: int
    iteration: int = 0
    stats_version: str | None = None
    format_version: str = FORMAT_VERSION

    def __post_init__(self):
        expected = param_shapes(self.dims, len(self.symbols), len(self.speakers))
        got = {k: v.shape for k, v in self.params.items()}
        if got != expected:
            missing = set(expected) - set(got)
            extra = set(got) - set(expected)
            wrong = {k: (got[k], expected[k]) for k in got.keys() & expected.keys()
                     if got[k] != expected[k]}
            raise CheckpointError(f"inconsistent checkpoint tensors: missing={missing}, "
                                  f"unexpected={extra}, bad shapes={wrong}")
        for k, v in self.params.items():
            if not np.all(np.isfinite(v)):
                raise CheckpointError(f"tensor {k} contains non-finite values")
        if self.symbols[0] != UNK:
            raise CheckpointError(f"symbols[0] must be {UNK!r}")
        self._symbol_lookup = {s: i for i, s in enumerate(self.symbols)}
        self._speaker_lookup = {s: i for i, s in enumerate(self.speakers)}

    def symbol_index(self, symbol: str) -> int:
        return self._symbol_lookup.get(symbol, 0)  # row 0 is UNK

    def speaker_index(self, speaker_id: str) -> int:
        try:
            return self._speaker_lookup[speaker_id]
        except KeyError:
            raise UnknownSpeakerError(
                f"speaker {speaker_id!r} not in checkpoint (has {self.speakers!r})") from None


def param_shapes(dims: AfpDims, vocab: int, n_speakers: int) -> dict[str, tuple]:
    shapes = {
        "phone_emb": (vocab, dims.phone_dim),
        "speaker_emb": (n_speakers, dims.speaker_dim),
        "dense_W": (dims.dense_dim, 2 * dims.block2_hidden),
        "dense_b": (dims.dense_dim,),
        "proj_W": (N_OUT, dims.dense_dim),
        "proj_b": (N_OUT,),
    }
    for l, (d_in, h) in enumerate(dims.layer_plan()):
        for d in ("fw", "bw"):
            shapes[f"lstm{l}_{d}_W"] = (4 * h, d_in)
            shapes[f"lstm{l}_{d}_U"] = (4 * h, h)
            shapes[f"lstm{l}_{d}_b"] = (4 * h,)
    return shapes


def init_checkpoint(symbols: list[str], speakers: list[str], seed: int,
                    dims: AfpDims = AfpDims(), stats_version: str | None = None) -> AfpCheckpoint:
    """Fresh weights: uniform +-1/sqrt(fan_in); forget-gate bias 1."""
    if UNK in symbols:
        symbols = [s for s in symbols if s != UNK]
    symbols = [UNK] + sorted(symbols)
    speakers = sorted(speakers)
    rng = np.random.default_rng(seed)

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    params = {
        "phone_emb": uniform((len(symbols), dims.phone_dim), dims.phone_dim),
        "speaker_emb": uniform((len(speakers), dims.speaker_dim), dims.speaker_dim),
        "dense_W": uniform((dims.dense_dim, 2 * dims.block2_hidden), 2 * dims.block2_hidden),
        "dense_b": np.zeros(dims.dense_dim),
        "proj_W": uniform((N_OUT, dims.dense_dim), dims.dense_dim),
        "proj_b": np.zeros(N_OUT),
    }
    for l, (d_in, h) in enumerate(dims.layer_plan()):
        for d in ("fw", "bw"):
            params[f"lstm{l}_{d}_W"] = uniform((4 * h, d_in), d_in)
            params[f"lstm{l}_{d}_U"] = uniform((4 * h, h), h)
            b = np.zeros(4 * h)
            b[h:2 * h] = 1.0  # forget gate
            params[f"lstm{l}_{d}_b"] = b
    return AfpCheckpoint(params=params, symbols=symbols, speakers=speakers, dims=dims,
                         seed=seed, stats_version=stats_version)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _lstm_forward(W, U, b, xs):
    """Run one direction over xs (N, d_in), ascending. Returns (hs, cache)."""
    n = xs.shape[0]
    h4 = W.shape[0]
    h = h4 // 4
    hs = np.zeros((n, h))
    cache = []
    h_prev = np.zeros(h)
    c_prev = np.zeros(h)
    for t in range(n):
        z = W @ xs[t] + U @ h_prev + b
        i = _sigmoid(z[:h])
        f = _sigmoid(z[h:2 * h])
        g = np.tanh(z[2 * h:3 * h])
        o = _sigmoid(z[3 * h:])
        c = f * c_prev + i * g
        tc = np.tanh(c)
        hs[t] = o * tc
        cache.append((i, f, g, o, tc, h_prev, c_prev))
        h_prev = hs[t]
        c_prev = c
    return hs, cache


def _lstm_backward(W, U, xs, cache, dhs):
    """Gradients for one direction; dhs is dLoss/dh_t. Returns (dxs, dW, dU, db)."""
    n, h = dhs.shape
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(4 * h)
    dxs = np.zeros_like(xs)
    dh_next = np.zeros(h)
    dc_next = np.zeros(h)
    for t in range(n - 1, -1, -1):
        i, f, g, o, tc, h_prev, c_prev = cache[t]
        dh = dhs[t] + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        df = dc * c_prev
        di = dc * g
        dg = dc * i
        dz = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g * g),
            do * o * (1.0 - o),
        ])
        dW += np.outer(dz, xs[t])
        dU += np.outer(dz, h_prev)
        db += dz
        dxs[t] = W.T @ dz
        dh_next = U.T @ dz
        dc_next = dc * f
    return dxs, dW, dU, db


def encode_tokens(ckpt: AfpCheckpoint, tokens: list[PhoneToken], speaker_id: str):
    """Token embeddings (N, input_dim) plus the index bookkeeping for backprop."""
    if len(tokens) < 1:
        raise ValueError("need at least one token")
    sym_idx = np.array([ckpt.symbol_index(t.symbol) for t in tokens])
    spk_idx = ckpt.speaker_index(speaker_id)
    phone = ckpt.params["phone_emb"][sym_idx]
    speaker = np.tile(ckpt.params["speaker_emb"][spk_idx], (len(tokens), 1))
    return np.concatenate([phone, speaker], axis=1), sym_idx, spk_idx


def forward_core(params: dict, dims: AfpDims, x: np.ndarray):
    """Trunk forward on encoded inputs x (N, input_dim). Returns (pred, cache)."""
    a = x
    layer_caches = []
    for l in range(len(dims.layer_plan())):
        hf, cf = _lstm_forward(params[f"lstm{l}_fw_W"], params[f"lstm{l}_fw_U"],
                               params[f"lstm{l}_fw_b"], a)
        hb_r, cb = _lstm_forward(params[f"lstm{l}_bw_W"], params[f"lstm{l}_bw_U"],
                                 params[f"lstm{l}_bw_b"], a[::-1])
        layer_caches.append((a, cf, cb))
        a = np.concatenate([hf, hb_r[::-1]], axis=1)
    d = a @ params["dense_W"].T + params["dense_b"]
    u = np.tanh(d)
    pred = u @ params["proj_W"].T + params["proj_b"]
    return pred, (layer_caches, a, u)


def backward_core(params: dict, dims: AfpDims, cache, dpred: np.ndarray):
    """Gradients of the trunk. Returns (dx, grads dict without embeddings)."""
    layer_caches, a, u = cache
    grads = {
        "proj_W": dpred.T @ u,
        "proj_b": dpred.sum(axis=0),
    }
    du = dpred @ params["proj_W"]
    dd = du * (1.0 - u * u)
    grads["dense_W"] = dd.T @ a
    grads["dense_b"] = dd.sum(axis=0)
    da = dd @ params["dense_W"]
    for l in range(len(dims.layer_plan()) - 1, -1, -1):
        x_in, cf, cb = layer_caches[l]
        h = dims.layer_plan()[l][1]
        dxf, dWf, dUf, dbf = _lstm_backward(params[f"lstm{l}_fw_W"], params[f"lstm{l}_fw_U"],
                                            x_in, cf, da[:, :h])
        dxb_r, dWb, dUb, dbb = _lstm_backward(params[f"lstm{l}_bw_W"], params[f"lstm{l}_bw_U"],
                                              x_in[::-1], cb, da[::-1, h:])
        grads[f"lstm{l}_fw_W"] = dWf
        grads[f"lstm{l}_fw_U"] = dUf
        grads[f"lstm{l}_fw_b"] = dbf
        grads[f"lstm{l}_bw_W"] = dWb
        grads[f"lstm{l}_bw_U"] = dUb
        grads[f"lstm{l}_bw_b"] = dbb
        da = dxf + dxb_r[::-1]
    return da, grads


def embedding_grads(ckpt: AfpCheckpoint, dx: np.ndarray, sym_idx: np.ndarray, spk_idx: int):
    dphone = np.zeros_like(ckpt.params["phone_emb"])
    np.add.at(dphone, sym_idx, dx[:, :ckpt.dims.phone_dim])
    dspeaker = np.zeros_like(ckpt.params["speaker_emb"])
    dspeaker[spk_idx] = dx[:, ckpt.dims.phone_dim:].sum(axis=0)
    return {"phone_emb": dphone, "speaker_emb": dspeaker}


def afp_forward(ckpt: AfpCheckpoint, tokens: list[PhoneToken],
                speaker_id: str) -> PhoneFeatures:
    """Predict normalized per-token features; boundary rows clamp to 0."""
    x, sym_idx, spk_idx = encode_tokens(ckpt, tokens, speaker_id)
    pred, _ = forward_core(ckpt.params, ckpt.dims, x)
    out = pred.copy()
    for i, tok in enumerate(tokens):
        if tok.is_boundary:
            out[i] = 0.0
    return PhoneFeatures(out, NORMALIZED, stats_version=ckpt.stats_version)


def save_checkpoint(path, ckpt: AfpCheckpoint):
    meta = {
        "format_version": ckpt.format_version,
        "symbols": ckpt.symbols,
        "speakers": ckpt.speakers,
        "dims": vars(ckpt.dims) | {},
        "seed": ckpt.seed,
        "iteration": ckpt.iteration,
        "stats_version": ckpt.stats_version,
    }
    arrays = {f"param/{k}": v for k, v in ckpt.params.items()}
    np.savez(Path(path), __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
             **arrays)


def load_checkpoint(path) -> AfpCheckpoint:
    with np.load(Path(path)) as data:
        try:
            meta = json.loads(bytes(data["__meta__"]).decode())
        except KeyError:
            raise CheckpointError(f"{path}: not an AFP checkpoint (no metadata)") from None
        if meta.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(f"{path}: format_version {meta.get('format_version')!r}, "
                                  f"this build reads {FORMAT_VERSION!r}")
        params = {k[len("param/"):]: data[k].astype(np.float64)
                  for k in data.files if k.startswith("param/")}
    return AfpCheckpoint(
        params=params,
        symbols=list(meta["symbols"]),
        speakers=list(meta["speakers"]),
        dims=AfpDims(**meta["dims"]),
        seed=int(meta["seed"]),
        iteration=int(meta["iteration"]),
        stats_version=meta.get("stats_version"),
    )

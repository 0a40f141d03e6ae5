"""F0 estimation: normalized cross-correlation candidates resolved by DP.

Single-resolution tracker. Per frame we compute the normalized
cross-correlation function (NCCF) over lags spanning the configured pitch
range, keep up to ``max_candidates`` local maxima plus one "unvoiced"
candidate, then pick the globally cheapest path with dynamic programming.
Path costs penalize octave jumps between voiced frames and switching
between voiced and unvoiced states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from prosoctl.dsp.audio import AudioBuffer
from prosoctl.dsp.grid import FrameGrid

# correlation windows with less energy than this are treated as silence
_ENERGY_FLOOR = 1e-10
# favors shorter lags (scaled by lag/lag_max) so period-multiple peaks of
# near-equal strength resolve to the true period instead of an octave down
_LAG_BIAS = 0.03


class AudioTooShortError(ValueError):
    """Signal shorter than one pitch analysis window (2 * sr / f0_min)."""


@dataclass(frozen=True)
class F0Config:
    f0_min: float = 60.0
    f0_max: float = 400.0
    nccf_threshold: float = 0.3
    transition_cost: float = 0.15   # per octave, voiced-to-voiced
    voicing_cost: float = 0.12      # voiced <-> unvoiced switch
    max_candidates: int = 12

    def validate(self, sample_rate: int):
        if not (0.0 < self.f0_min < self.f0_max <= sample_rate / 4):
            raise ValueError(f"need 0 < f0_min < f0_max <= sample_rate/4, got "
                             f"f0_min={self.f0_min}, f0_max={self.f0_max}, sr={sample_rate}")
        if not (0.0 < self.nccf_threshold < 1.0):
            raise ValueError(f"nccf_threshold must be in (0, 1), got {self.nccf_threshold}")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be >= 1")


@dataclass
class F0Track:
    f0: np.ndarray        # Hz; 0.0 on unvoiced frames
    voicing: np.ndarray   # bool
    nccf_peak: np.ndarray  # chosen candidate's NCCF value; 0.0 when unvoiced
    grid: FrameGrid

    def __post_init__(self):
        n = self.grid.n_frames
        if not (len(self.f0) == len(self.voicing) == len(self.nccf_peak) == n):
            raise ValueError("track arrays must all have grid.n_frames entries")

    def __len__(self) -> int:
        return len(self.f0)

    def voiced_f0(self) -> np.ndarray:
        return self.f0[self.voicing]


def _nccf_frame(x: np.ndarray, start: int, win: int, lag_min: int, lag_max: int) -> np.ndarray:
    """NCCF values for lags [lag_min, lag_max] of the window starting at `start`.

    Returns zeros when the window (or every shifted window) is silent.
    """
    seg = x[start:start + win + lag_max]
    if len(seg) < win + lag_max:
        seg = np.concatenate([seg, np.zeros(win + lag_max - len(seg))])
    a = seg[:win]
    e0 = float(a @ a)
    out = np.zeros(lag_max - lag_min + 1)
    if e0 < _ENERGY_FLOOR:
        return out
    # numerator for every lag at once: correlate(seg, a, 'valid')[k] = sum a[j]*seg[j+k]
    num = np.correlate(seg, a, mode="valid")  # length lag_max + 1
    sq = np.concatenate([[0.0], np.cumsum(seg * seg)])
    ek = sq[win:] - sq[:-win]                 # energy of seg[k:k+win], k = 0..lag_max
    denom = np.sqrt(e0 * ek[lag_min:lag_max + 1])
    ok = denom > _ENERGY_FLOOR
    vals = num[lag_min:lag_max + 1]
    out[ok] = vals[ok] / denom[ok]
    return out


def _peak_candidates(nccf: np.ndarray, lag_min: int, max_candidates: int):
    """Local maxima of the NCCF, parabolic-refined, strongest first."""
    c = nccf
    if len(c) < 3:
        return []
    mid = c[1:-1]
    is_peak = (mid > c[:-2]) & (mid >= c[2:]) & (mid > 0.0)
    idx = np.nonzero(is_peak)[0] + 1
    if len(idx) == 0:
        return []
    order = np.argsort(c[idx])[::-1][:max_candidates]
    cands = []
    for i in idx[order]:
        y0, y1, y2 = c[i - 1], c[i], c[i + 1]
        denom = y0 - 2.0 * y1 + y2
        shift = 0.0 if abs(denom) < 1e-12 else 0.5 * (y0 - y2) / denom
        shift = float(np.clip(shift, -0.5, 0.5))
        lag = lag_min + i + shift
        val = y1 - 0.25 * (y0 - y2) * shift
        cands.append((lag, min(float(val), 1.0)))
    return cands


def _transition_costs(prev_f0: np.ndarray, cur_f0: np.ndarray, cfg: F0Config) -> np.ndarray:
    """Cost matrix (len(prev) x len(cur)); state f0 == 0 means unvoiced."""
    pv = prev_f0[:, None] > 0.0
    cv = cur_f0[None, :] > 0.0
    both = pv & cv
    ratio = np.ones((len(prev_f0), len(cur_f0)))
    np.divide(prev_f0[:, None], cur_f0[None, :], out=ratio, where=both)
    cost = np.where(pv ^ cv, cfg.voicing_cost, 0.0)
    cost = np.where(both, cfg.transition_cost * np.abs(np.log2(ratio)), cost)
    return cost


def estimate_f0(audio: AudioBuffer, grid: FrameGrid, cfg: F0Config = F0Config()) -> F0Track:
    """Track F0 on the shared frame grid.

    Frame t's correlation window starts at t*hop, is sr/f0_min samples
    long, and is scanned over lags sr/f0_max .. sr/f0_min; the tail is
    zero-padded like every other analysis op.
    """
    audio.require_analyzable()
    sr = audio.sample_rate
    cfg.validate(sr)
    win = int(round(sr / cfg.f0_min))
    lag_min = max(2, int(np.floor(sr / cfg.f0_max)))
    lag_max = int(np.ceil(sr / cfg.f0_min))
    if len(audio.samples) < 2 * win:
        raise AudioTooShortError(
            f"need at least {2 * win} samples (2 * sr / f0_min) for "
            f"f0_min={cfg.f0_min} at {sr} Hz, got {len(audio.samples)}")

    x = audio.samples
    n = grid.n_frames
    unvoiced_cost = 1.0 - cfg.nccf_threshold
    # scan a couple of lags past the range edges so peaks sitting exactly on
    # an edge are still proper local maxima; refined lags clip back inside
    scan_min = max(2, lag_min - 2)
    scan_max = lag_max + 2
    # state arrays per frame; index 0 is the unvoiced candidate
    state_f0, state_val, state_loc = [], [], []
    for t in range(n):
        nccf = _nccf_frame(x, t * grid.hop, win, scan_min, scan_max)
        cands = _peak_candidates(nccf, scan_min, cfg.max_candidates)
        cands = [(min(max(lag, lag_min), lag_max), val) for lag, val in cands
                 if lag_min - 1.0 <= lag <= lag_max + 1.0]
        lags = np.array([lag for lag, _ in cands])
        vals = np.array([val for _, val in cands])
        f0s = np.concatenate([[0.0], sr / lags]) if len(cands) else np.array([0.0])
        vv = np.concatenate([[0.0], vals]) if len(cands) else np.array([0.0])
        loc = np.concatenate([[unvoiced_cost],
                              1.0 - vals + _LAG_BIAS * lags / lag_max]) if len(cands) \
            else np.array([unvoiced_cost])
        state_f0.append(f0s)
        state_val.append(vv)
        state_loc.append(loc)

    total = [state_loc[0].copy()]
    back = [np.full(len(state_f0[0]), -1, dtype=int)]
    for t in range(1, n):
        trans = _transition_costs(state_f0[t - 1], state_f0[t], cfg)
        cand = total[t - 1][:, None] + trans
        bk = np.argmin(cand, axis=0)
        total.append(cand[bk, np.arange(cand.shape[1])] + state_loc[t])
        back.append(bk)

    f0 = np.zeros(n)
    voicing = np.zeros(n, dtype=bool)
    peak = np.zeros(n)
    j = int(np.argmin(total[-1]))
    for t in range(n - 1, -1, -1):
        if state_f0[t][j] > 0.0:
            f0[t] = float(np.clip(state_f0[t][j], cfg.f0_min, cfg.f0_max))
            voicing[t] = True
            peak[t] = state_val[t][j]
        j = int(back[t][j])

    return F0Track(f0=f0, voicing=voicing, nccf_peak=peak, grid=grid)

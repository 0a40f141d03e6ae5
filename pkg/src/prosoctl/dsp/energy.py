"""Per-frame root-mean-square energy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from prosoctl.dsp.audio import AudioBuffer
from prosoctl.dsp.grid import FrameGrid
from prosoctl.dsp.spectral import frame_signal


@dataclass
class EnergyTrack:
    rms: np.ndarray  # (n_frames,), >= 0
    grid: FrameGrid

    def __post_init__(self):
        self.rms = np.asarray(self.rms, dtype=np.float64)
        if self.rms.shape != (self.grid.n_frames,):
            raise ValueError(f"rms length {self.rms.shape} does not match grid "
                             f"n_frames {self.grid.n_frames}")

    def __len__(self) -> int:
        return len(self.rms)


def rms_energy(audio: AudioBuffer, grid: FrameGrid) -> EnergyTrack:
    """RMS over each frame's samples. Unwindowed, so rms(c*x) == |c|*rms(x)."""
    audio.require_analyzable()
    frames = frame_signal(audio.samples, grid)
    return EnergyTrack(rms=np.sqrt(np.mean(frames * frames, axis=1)), grid=grid)

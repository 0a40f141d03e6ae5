"""Re-measure rendered audio through the analysis stack."""

from __future__ import annotations

import numpy as np

from prosoctl.dsp.energy import rms_energy
from prosoctl.dsp.pitch import F0Config, estimate_f0
from prosoctl.features import DURATION, ENERGY, F0, PhoneFeatures, extract_per_phone
from prosoctl.synth.render import Rendition


def measure_rendition(rendition: Rendition, f0_cfg: F0Config = F0Config()) -> PhoneFeatures:
    """Per-phone raw features measured from the rendition's own audio.

    Uses the realized alignment, so durations come back exactly as
    rendered; F0 and energy go through the same estimators as corpus
    extraction.
    """
    track = estimate_f0(rendition.audio, rendition.grid, f0_cfg)
    energy = rms_energy(rendition.audio, rendition.grid)
    return extract_per_phone(track, energy, rendition.realized)


def utterance_level(rendition: Rendition, f0_cfg: F0Config = F0Config()) -> dict[str, float]:
    """Utterance aggregates: mean voiced-frame F0, mean frame RMS, total frames."""
    track = estimate_f0(rendition.audio, rendition.grid, f0_cfg)
    energy = rms_energy(rendition.audio, rendition.grid)
    voiced = track.voiced_f0()
    return {
        "f0": float(voiced.mean()) if len(voiced) else 0.0,
        "energy": float(energy.rms.mean()),
        "duration": float(rendition.grid.n_frames),
    }


def phone_level(measured: PhoneFeatures, indices) -> np.ndarray:
    """Rows of the measured (N, 3) matrix for the given phone indices."""
    return measured.values[list(indices)]

"""Deterministic source-filter synthesizer driven by per-phone features."""

from prosoctl.synth.render import Rendition, SynthConfig, render_mel, synthesize
from prosoctl.synth.timbre import (FormantSpec, PhoneTimbre, TimbreTable,
                                   builtin_timbre_table)

__all__ = [
    "FormantSpec",
    "PhoneTimbre",
    "Rendition",
    "SynthConfig",
    "TimbreTable",
    "builtin_timbre_table",
    "render_mel",
    "synthesize",
]

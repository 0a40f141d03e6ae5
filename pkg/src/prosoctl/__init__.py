"""Per-phone prosody toolkit: extract, predict, edit, resynthesize, measure."""

__version__ = "0.1.0"

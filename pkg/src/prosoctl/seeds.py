"""Deterministic seed derivation.

Every random choice in the toolkit flows from one master seed through
named sub-seeds, so any stage can be re-run in isolation and still
reproduce the full pipeline bit for bit.
"""

import hashlib

import numpy as np


def derive_seed(master: int, *labels) -> int:
    """Derive a 63-bit sub-seed from a master seed and role labels.

    Labels may be strings or ints; the derivation is stable across runs
    and platforms (SHA-256 of the canonical label string).
    """
    text = repr(int(master)) + "".join("/" + repr(lab) for lab in labels)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def rng_for(master: int, *labels) -> np.random.Generator:
    """Seeded generator for the given role."""
    return np.random.default_rng(derive_seed(master, *labels))

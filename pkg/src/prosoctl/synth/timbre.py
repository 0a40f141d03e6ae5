"""Per-symbol timbre: voicing flag and up to three formant resonators."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class FormantSpec:
    center_hz: float
    bandwidth_hz: float
    gain: float = 1.0

    def __post_init__(self):
        if self.center_hz <= 0 or self.bandwidth_hz <= 0:
            raise ValueError(f"formant center and bandwidth must be positive, "
                             f"got {self.center_hz}, {self.bandwidth_hz}")


@dataclass(frozen=True)
class PhoneTimbre:
    voiced: bool
    formants: tuple[FormantSpec, ...] = ()

    def __post_init__(self):
        if len(self.formants) > 3:
            raise ValueError("at most 3 formants per phone")


class TimbreTable:
    """Symbol -> timbre lookup with an optional default entry."""

    def __init__(self, entries: dict[str, PhoneTimbre], default: PhoneTimbre | None = None):
        self.entries = dict(entries)
        self.default = default

    def lookup(self, symbol: str) -> PhoneTimbre:
        timbre = self.entries.get(symbol, self.default)
        if timbre is None:
            raise KeyError(f"no timbre entry for symbol {symbol!r} and no default")
        return timbre

    def to_doc(self) -> dict:
        def enc(t: PhoneTimbre):
            return {"voiced": t.voiced,
                    "formants": [[f.center_hz, f.bandwidth_hz, f.gain] for f in t.formants]}
        doc = {"entries": {s: enc(t) for s, t in sorted(self.entries.items())}}
        if self.default is not None:
            doc["default"] = enc(self.default)
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "TimbreTable":
        def dec(body) -> PhoneTimbre:
            formants = tuple(FormantSpec(*f) for f in body.get("formants", []))
            return PhoneTimbre(voiced=bool(body["voiced"]), formants=formants)
        entries = {s: dec(b) for s, b in doc.get("entries", {}).items()}
        default = dec(doc["default"]) if "default" in doc else None
        return cls(entries, default)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_doc(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TimbreTable":
        return cls.from_doc(json.loads(Path(path).read_text(encoding="utf-8")))


def builtin_timbre_table() -> TimbreTable:
    """Small built-in inventory: five vowels with textbook formant triples,
    a few consonant classes, and a schwa-like default."""
    v = PhoneTimbre
    f = FormantSpec
    entries = {
        "a": v(True, (f(700, 110), f(1220, 140), f(2600, 180))),
        "e": v(True, (f(530, 90), f(1840, 150), f(2480, 200))),
        "i": v(True, (f(300, 70), f(2300, 160), f(3000, 220))),
        "o": v(True, (f(500, 90), f(1000, 120), f(2450, 200))),
        "u": v(True, (f(330, 70), f(900, 110), f(2300, 190))),
        # nasals: voiced, low first resonance, muted upper structure
        "m": v(True, (f(280, 90), f(1100, 300, 0.4), f(2300, 350, 0.25))),
        "n": v(True, (f(320, 90), f(1400, 300, 0.4), f(2600, 350, 0.25))),
        # liquids
        "l": v(True, (f(380, 90), f(1300, 160, 0.7), f(2700, 250, 0.4))),
        "r": v(True, (f(420, 100), f(1300, 170, 0.7), f(1900, 220, 0.5))),
        # voiceless fricatives: noise through high resonances
        "s": v(False, (f(5200, 900), f(7200, 1200, 0.6))),
        "f": v(False, (f(4200, 1400), f(6800, 1600, 0.5))),
        "x": v(False, (f(2900, 800), f(4600, 1200, 0.5))),
        # stop-ish: broadband noise, low gain shaping
        "t": v(False, (f(3800, 1200), f(6000, 1500, 0.6))),
        "k": v(False, (f(2200, 800), f(3600, 1200, 0.6))),
        "p": v(False, (f(1100, 900), f(2500, 1400, 0.5))),
    }
    default = v(True, (f(500, 100), f(1500, 160), f(2500, 220)))
    return TimbreTable(entries, default)

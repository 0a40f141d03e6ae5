"""Utterances and their phone/frame alignments.

One JSON document per utterance. Frame indices are defined on the shared
analysis grid; the file records sample_rate and hop so a mismatch against
the analysis configuration is detectable at load time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from prosoctl.dsp.grid import DEFAULT_HOP, DEFAULT_SAMPLE_RATE

PHONE = "phone"
WORD_BOUNDARY = "word_boundary"
SENTENCE_BOUNDARY = "sentence_boundary"
KINDS = (PHONE, WORD_BOUNDARY, SENTENCE_BOUNDARY)


class AlignmentError(ValueError):
    """Schema or invariant violation in an alignment document."""


@dataclass(frozen=True)
class AlignmentSpan:
    start_frame: int
    end_frame: int  # inclusive

    def __post_init__(self):
        if self.start_frame < 0:
            raise AlignmentError(f"start_frame must be >= 0, got {self.start_frame}")
        if self.end_frame < self.start_frame:
            raise AlignmentError(f"end_frame ({self.end_frame}) precedes "
                                 f"start_frame ({self.start_frame})")

    @property
    def n_frames(self) -> int:
        return self.end_frame - self.start_frame + 1


@dataclass(frozen=True)
class PhoneToken:
    symbol: str
    kind: str = PHONE
    stressed: bool = False
    span: AlignmentSpan | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise AlignmentError(f"unknown token kind {self.kind!r}")
        if self.is_boundary and self.span is not None:
            raise AlignmentError(f"boundary token {self.symbol!r} must not carry span")
        if self.is_boundary and self.stressed:
            raise AlignmentError(f"boundary token {self.symbol!r} must not be stressed")

    @property
    def is_boundary(self) -> bool:
        return self.kind != PHONE


@dataclass
class Utterance:
    utterance_id: str
    speaker_id: str
    phones: list[PhoneToken]
    sample_rate: int = DEFAULT_SAMPLE_RATE
    hop: int = DEFAULT_HOP
    audio_path: str | None = None
    n_frames: int | None = None  # known once bound to audio

    def __post_init__(self):
        if not self.utterance_id or not self.speaker_id:
            raise AlignmentError("utterance_id and speaker_id must be non-empty")
        self._check_spans()

    def _check_spans(self):
        prev_end = -1
        for i, tok in enumerate(self.phones):
            if tok.is_boundary:
                continue
            if tok.span is None:
                continue
            if tok.span.start_frame <= prev_end:
                raise AlignmentError(
                    f"phones[{i}] span [{tok.span.start_frame}, {tok.span.end_frame}] "
                    f"overlaps or precedes the previous span ending at {prev_end}")
            prev_end = tok.span.end_frame
        if self.n_frames is not None and prev_end >= self.n_frames:
            raise AlignmentError(f"last span ends at frame {prev_end} but the "
                                 f"utterance has only {self.n_frames} frames")

    def __len__(self) -> int:
        return len(self.phones)

    @property
    def last_frame(self) -> int:
        ends = [t.span.end_frame for t in self.phones if t.span is not None]
        return max(ends) if ends else -1

    def boundary_mask(self):
        return [tok.is_boundary for tok in self.phones]

    def with_audio(self, audio_path: str, n_frames: int) -> "Utterance":
        utt = replace(self, audio_path=audio_path, n_frames=n_frames)
        return utt


def _expect(doc: dict, key: str, types, where: str):
    if key not in doc:
        raise AlignmentError(f"{where}: missing field {key!r}")
    val = doc[key]
    if not isinstance(val, types) or isinstance(val, bool) and bool not in _as_tuple(types):
        raise AlignmentError(f"{where}: field {key!r} has type {type(val).__name__}, "
                             f"expected {getattr(types, '__name__', types)}")
    return val


def _as_tuple(types):
    return types if isinstance(types, tuple) else (types,)


def parse_alignment(doc: dict, where: str = "alignment") -> Utterance:
    """Validate and convert one alignment JSON document."""
    utterance_id = _expect(doc, "utterance_id", str, where)
    speaker_id = _expect(doc, "speaker_id", str, where)
    sample_rate = _expect(doc, "sample_rate", int, where)
    hop = _expect(doc, "hop", int, where)
    items = _expect(doc, "phones", list, where)
    phones = []
    for i, item in enumerate(items):
        ctx = f"{where}: phones[{i}]"
        if not isinstance(item, dict):
            raise AlignmentError(f"{ctx}: expected an object")
        symbol = _expect(item, "symbol", str, ctx)
        kind = _expect(item, "kind", str, ctx)
        if kind not in KINDS:
            raise AlignmentError(f"{ctx}: field 'kind' is {kind!r}, expected one of {KINDS}")
        stressed = _expect(item, "stressed", bool, ctx)
        has_start = item.get("start_frame") is not None
        has_end = item.get("end_frame") is not None
        span = None
        if kind != PHONE:
            if has_start or has_end:
                raise AlignmentError(f"{ctx}: boundary token must not carry span")
        elif has_start or has_end:
            if not (has_start and has_end):
                raise AlignmentError(f"{ctx}: start_frame and end_frame must come together")
            start = _expect(item, "start_frame", int, ctx)
            end = _expect(item, "end_frame", int, ctx)
            try:
                span = AlignmentSpan(start, end)
            except AlignmentError as exc:
                raise AlignmentError(f"{ctx}: {exc}") from None
        try:
            phones.append(PhoneToken(symbol=symbol, kind=kind, stressed=stressed, span=span))
        except AlignmentError as exc:
            raise AlignmentError(f"{ctx}: {exc}") from None
    try:
        return Utterance(utterance_id=utterance_id, speaker_id=speaker_id,
                         phones=phones, sample_rate=sample_rate, hop=hop)
    except AlignmentError as exc:
        raise AlignmentError(f"{where}: {exc}") from None


def load_alignment(path) -> Utterance:
    """Load one utterance alignment from a JSON file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise AlignmentError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise AlignmentError(f"{path}: top level must be an object")
    return parse_alignment(doc, where=str(path))


def utterance_to_doc(utt: Utterance) -> dict:
    phones = []
    for tok in utt.phones:
        item = {"symbol": tok.symbol, "kind": tok.kind, "stressed": tok.stressed}
        if tok.span is not None:
            item["start_frame"] = tok.span.start_frame
            item["end_frame"] = tok.span.end_frame
        phones.append(item)
    return {
        "utterance_id": utt.utterance_id,
        "speaker_id": utt.speaker_id,
        "sample_rate": utt.sample_rate,
        "hop": utt.hop,
        "phones": phones,
    }


def save_alignment(path, utt: Utterance):
    Path(path).write_text(json.dumps(utterance_to_doc(utt), indent=1) + "\n", encoding="utf-8")


def alignment_from_ctm(text: str, utterance_id: str, speaker_id: str,
                       sample_rate: int = DEFAULT_SAMPLE_RATE,
                       hop: int = DEFAULT_HOP) -> Utterance:
    """Convert CTM-style lines (`start_sec dur_sec symbol [stress]`) to an Utterance.

    Boundary markers are written as symbols `<wb>` / `<sb>`. Times snap to
    the frame grid; a convenience for corpora aligned elsewhere.
    """
    phones = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 3:
            raise AlignmentError(f"ctm line {lineno}: expected 'start dur symbol [stress]'")
        symbol = parts[2]
        if symbol == "<wb>":
            phones.append(PhoneToken(symbol, WORD_BOUNDARY))
            continue
        if symbol == "<sb>":
            phones.append(PhoneToken(symbol, SENTENCE_BOUNDARY))
            continue
        start_s, dur_s = float(parts[0]), float(parts[1])
        stressed = len(parts) > 3 and parts[3] in ("1", "stressed", "true")
        start = int(round(start_s * sample_rate / hop))
        end = max(start, int(round((start_s + dur_s) * sample_rate / hop)) - 1)
        phones.append(PhoneToken(symbol, PHONE, stressed, AlignmentSpan(start, end)))
    return Utterance(utterance_id=utterance_id, speaker_id=speaker_id, phones=phones,
                     sample_rate=sample_rate, hop=hop)

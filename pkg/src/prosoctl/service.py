"""HTTP session API for the editor UI: predict, edit, synthesize, re-measure.

Sessions are in-memory with optional JSON snapshots on write. Within a
session a revision counter enforces single-writer semantics: an edit
carries the revision it was based on and gets 409 when stale. A
session's (base features, edit script) fully determines its rendition,
so replaying the script on a fresh session yields bit-identical audio.
"""

from __future__ import annotations

import io
import json
import struct
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from prosoctl.afp.model import AfpCheckpoint, UnknownSpeakerError, afp_forward
from prosoctl.control import EditError, EditOp, EditScript, apply_edits
from prosoctl.corpus.alignment import Utterance
from prosoctl.dsp.audio import PCM_SCALE
from prosoctl.eval.experiments import predict_and_render, prepare_raw_for_synthesis
from prosoctl.eval.measures import measure_rendition
from prosoctl.features import NORMALIZED, PhoneFeatures, SpeakerStats, denormalize
from prosoctl.synth.render import SynthConfig, synthesize


@dataclass
class Session:
    session_id: str
    utterance: Utterance
    base: PhoneFeatures                    # AFP prediction, normalized; immutable
    script: EditScript
    revision: int = 0
    current: PhoneFeatures | None = None   # base + script applied
    wav_bytes: bytes | None = None
    wav_revision: int | None = None
    measured: np.ndarray | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


@dataclass
class ServiceState:
    utterances: dict[str, Utterance]
    ckpt: AfpCheckpoint
    stats: dict[str, SpeakerStats]
    synth_cfg: SynthConfig
    sessions_dir: Path | None = None
    sessions: dict[str, Session] = field(default_factory=dict)


class CreateSessionBody(BaseModel):
    utterance_id: str
    speaker_id: str | None = None


class EditsBody(BaseModel):
    revision: int
    ops: list[dict]
    meta: dict = {}


def _wav_bytes(samples: np.ndarray, sample_rate: int) -> bytes:
    x = np.clip(samples, -1.0, 32767.0 / PCM_SCALE)
    pcm = np.round(x * PCM_SCALE).astype("<i2").tobytes()
    fmt = struct.pack("<HHIIHH", 1, 1, sample_rate, sample_rate * 2, 2, 16)
    return b"".join([b"RIFF", struct.pack("<I", 4 + 8 + len(fmt) + 8 + len(pcm)), b"WAVE",
                     b"fmt ", struct.pack("<I", len(fmt)), fmt,
                     b"data", struct.pack("<I", len(pcm)), pcm])


def _feature_view(state: ServiceState, sess: Session) -> dict:
    utt = sess.utterance
    stats = state.stats[utt.speaker_id]
    current = sess.current if sess.current is not None else sess.base
    raw = denormalize(current, stats, utt=utt)
    return {
        "session_id": sess.session_id,
        "revision": sess.revision,
        "utterance_id": utt.utterance_id,
        "speaker_id": utt.speaker_id,
        "phones": [{"symbol": t.symbol, "kind": t.kind, "stressed": t.stressed}
                   for t in utt.phones],
        "normalized": current.values.tolist(),
        "raw": raw.values.tolist(),
        "base_normalized": sess.base.values.tolist(),
        "measured": None if sess.measured is None else sess.measured.tolist(),
        "stats": {
            name: {"mean": st.mean, "std": st.std}
            for name, st in zip(("f0", "energy", "duration"),
                                (stats.f0, stats.energy, stats.duration))
        },
        "script": sess.script.to_doc(),
    }


def _snapshot(state: ServiceState, sess: Session):
    if state.sessions_dir is None:
        return
    state.sessions_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        "session_id": sess.session_id,
        "utterance_id": sess.utterance.utterance_id,
        "speaker_id": sess.utterance.speaker_id,
        "revision": sess.revision,
        "base_normalized": sess.base.values.tolist(),
        "script": sess.script.to_doc(),
    }
    (state.sessions_dir / f"{sess.session_id}.json").write_text(
        json.dumps(doc, indent=1), encoding="utf-8")


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="prosoctl editor service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    app.state.service = state

    def get_session(session_id: str) -> Session:
        sess = state.sessions.get(session_id)
        if sess is None:
            raise HTTPException(404, f"unknown session {session_id!r}")
        return sess

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        utt = state.utterances.get(body.utterance_id)
        if utt is None:
            raise HTTPException(404, f"unknown utterance {body.utterance_id!r}")
        speaker = body.speaker_id or utt.speaker_id
        try:
            state.ckpt.speaker_index(speaker)
        except UnknownSpeakerError as exc:
            raise HTTPException(404, str(exc)) from None
        if speaker != utt.speaker_id:
            utt = Utterance(utterance_id=utt.utterance_id, speaker_id=speaker,
                            phones=utt.phones, sample_rate=utt.sample_rate, hop=utt.hop)
        base = afp_forward(state.ckpt, utt.phones, speaker)
        sess = Session(session_id=uuid.uuid4().hex[:12], utterance=utt, base=base,
                       script=EditScript(), current=base.copy())
        state.sessions[sess.session_id] = sess
        _snapshot(state, sess)
        return _feature_view(state, sess)

    @app.get("/sessions/{session_id}/features")
    def get_features(session_id: str):
        return _feature_view(state, get_session(session_id))

    @app.post("/sessions/{session_id}/edits")
    def post_edits(session_id: str, body: EditsBody):
        sess = get_session(session_id)
        try:
            delta = [EditOp.from_doc(d) for d in body.ops]
        except (EditError, KeyError, TypeError, ValueError) as exc:
            raise HTTPException(400, f"malformed edit script: {exc}") from None
        with sess.lock:
            if body.revision != sess.revision:
                raise HTTPException(409, f"stale revision {body.revision}, "
                                         f"session is at {sess.revision}")
            stats = state.stats[sess.utterance.speaker_id]
            script = EditScript(ops=sess.script.ops + delta,
                                meta={**sess.script.meta, **body.meta})
            try:
                current = apply_edits(sess.base, script, sess.utterance, stats)
            except EditError as exc:
                raise HTTPException(400, str(exc)) from None
            sess.script = script
            sess.current = current
            sess.revision += 1
            _snapshot(state, sess)
        return _feature_view(state, sess)

    @app.post("/sessions/{session_id}/synthesize")
    def post_synthesize(session_id: str):
        sess = get_session(session_id)
        with sess.lock:
            stats = state.stats[sess.utterance.speaker_id]
            current = sess.current if sess.current is not None else sess.base
            raw = prepare_raw_for_synthesis(current, stats, sess.utterance)
            rend = synthesize(sess.utterance, raw, state.synth_cfg)
            measured = measure_rendition(rend)
            sess.measured = measured.values
            sess.wav_bytes = _wav_bytes(rend.audio.samples, rend.audio.sample_rate)
            sess.wav_revision = sess.revision
        view = _feature_view(state, sess)
        view["audio_url"] = f"/sessions/{session_id}/audio/{sess.wav_revision}"
        view["n_frames"] = rend.grid.n_frames
        view["warnings"] = rend.warnings
        return view

    @app.get("/sessions/{session_id}/audio/{revision}")
    def get_audio(session_id: str, revision: int):
        sess = get_session(session_id)
        if sess.wav_bytes is None or sess.wav_revision != revision:
            raise HTTPException(404, "no rendition for that revision; synthesize first")
        return Response(content=sess.wav_bytes, media_type="audio/wav")

    @app.post("/sessions/{session_id}/reset")
    def post_reset(session_id: str):
        sess = get_session(session_id)
        with sess.lock:
            sess.script = EditScript()
            sess.current = sess.base.copy()
            sess.revision += 1
            _snapshot(state, sess)
        return _feature_view(state, sess)

    @app.get("/utterances")
    def list_utterances():
        return [{"utterance_id": u.utterance_id, "speaker_id": u.speaker_id,
                 "n_tokens": len(u.phones)}
                for u in sorted(state.utterances.values(), key=lambda u: u.utterance_id)]

    return app


def build_state(align_dir, ckpt_path, stats_path, synth_cfg: SynthConfig | None = None,
                sessions_dir=None) -> ServiceState:
    from prosoctl.afp.model import load_checkpoint
    from prosoctl.features import load_speaker_stats
    from prosoctl.pipeline import load_corpus

    utts = {u.utterance_id: u for u in load_corpus(align_dir)}
    return ServiceState(
        utterances=utts,
        ckpt=load_checkpoint(ckpt_path),
        stats=load_speaker_stats(stats_path),
        synth_cfg=synth_cfg or SynthConfig(),
        sessions_dir=Path(sessions_dir) if sessions_dir else None,
    )

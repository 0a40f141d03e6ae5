"""Acceptance criteria, one test per criterion, each at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v`; a PASS/FAIL line per
criterion is printed in the terminal summary.
"""

import time
from contextlib import contextmanager

import numpy as np
import pytest
import scipy.stats
from fastapi.testclient import TestClient

from conftest import record_acceptance
from prosoctl.afp import TrainConfig, afp_train
from prosoctl.afp.gradcheck import gradient_check_random_configs
from prosoctl.afp.train import evaluate_loss
from prosoctl.corpus import load_alignment
from prosoctl.demo import make_demo_corpus
from prosoctl.dsp import (AudioBuffer, F0Config, FrameGrid, estimate_f0,
                          griffin_lim_trace, mel_spectrogram)
from prosoctl.eval.experiments import (run_disentanglement, run_reproducibility,
                                       run_temporal_precision)
from prosoctl.eval.mushra import (RatingRecord, filter_listeners, holm_bonferroni,
                                  welch_t_test)
from prosoctl.features import DURATION, FEATURE_NAMES
from prosoctl.pipeline import (compute_all_stats, extract_corpus, load_corpus,
                               normalize_records)
from prosoctl.service import ServiceState, create_app
from prosoctl.synth import SynthConfig

SR = 22050


@contextmanager
def criterion(name):
    info = {}
    try:
        yield info
    except BaseException as exc:
        record_acceptance(name, False, f"{type(exc).__name__}: {exc}")
        raise
    record_acceptance(name, True, info.get("detail", ""))


@pytest.fixture(scope="module")
def mem_corpus(tmp_path_factory):
    """Dedicated 10-utterance corpus for memorization and reproducibility."""
    root = tmp_path_factory.mktemp("mem_corpus")
    make_demo_corpus(root, n_utterances=10, seed=21)
    utts = load_corpus(root / "align")
    records = extract_corpus(utts, root / "wav")
    stats = compute_all_stats(records)
    normalize_records(records, stats)
    return utts, records, stats


def test_f0_estimator_accuracy():
    with criterion("F0 estimator: tones within 2 Hz, silence unvoiced, < 5 s") as info:
        start = time.monotonic()
        errors = []
        for freq in (100.0, 150.0, 220.0, 300.0):
            t = np.arange(SR) / SR
            audio = AudioBuffer(0.4 * np.sin(2 * np.pi * freq * t), SR)
            grid = FrameGrid.for_signal(len(audio))
            track = estimate_f0(audio, grid)
            need = 2 * int(round(SR / F0Config().f0_min))
            inner = slice(0, (len(audio.samples) - need) // grid.hop + 1)
            assert track.voicing[inner].all()
            err = abs(float(np.mean(track.f0[inner])) - freq)
            errors.append(err)
            assert err <= 2.0, f"{freq} Hz off by {err:.3f}"
        silence = AudioBuffer(np.zeros(SR), SR)
        track = estimate_f0(silence, FrameGrid.for_signal(SR))
        assert not track.voicing.any()
        elapsed = time.monotonic() - start
        assert elapsed < 5.0
        info["detail"] = f"max error {max(errors):.3f} Hz, {elapsed:.2f} s"


def test_per_phone_extraction_exactness(demo_env):
    with criterion("Per-phone extraction: durations exact, boundaries (0,0,0)") as info:
        checked = 0
        by_id = {rec.utterance_id: rec for rec in demo_env.records}
        for made in demo_env.made:
            utt = load_alignment(made.alignment_path)
            rec = by_id[utt.utterance_id]
            for i, tok in enumerate(utt.phones):
                if tok.is_boundary:
                    assert np.array_equal(rec.raw[i], np.zeros(3))
                else:
                    assert rec.raw[i, DURATION] == tok.span.n_frames
                checked += 1
        info["detail"] = f"{checked} tokens exact"


def test_normalization_unit_moments(demo_env):
    with criterion("Normalization: |mean| < 1e-9 and |std-1| < 1e-9 per speaker") as info:
        worst_mu, worst_sigma = 0.0, 0.0
        speakers = sorted({r.speaker_id for r in demo_env.records})
        for spk in speakers:
            rows = np.concatenate([r.normalized for r in demo_env.records
                                   if r.speaker_id == spk])
            raw = np.concatenate([r.raw for r in demo_env.records if r.speaker_id == spk])
            kinds = [k for r in demo_env.records if r.speaker_id == spk for k in r.kinds]
            is_phone = np.array([k == "phone" for k in kinds])
            cols = {0: is_phone & (raw[:, 0] > 0), 1: is_phone, 2: is_phone}
            for j, mask in cols.items():
                vals = rows[mask, j]
                worst_mu = max(worst_mu, abs(float(vals.mean())))
                worst_sigma = max(worst_sigma, abs(float(vals.std()) - 1.0))
        assert worst_mu < 1e-9
        assert worst_sigma < 1e-9
        info["detail"] = f"|mean| {worst_mu:.1e}, |std-1| {worst_sigma:.1e}"


def test_afp_gradient_check():
    with criterion("AFP gradients: < 1e-4 vs finite differences, 20 configs, < 60 s") as info:
        start = time.monotonic()
        worst = gradient_check_random_configs(n_configs=20, seed=0, epsilon=1e-5)
        elapsed = time.monotonic() - start
        assert worst < 1e-4
        assert elapsed < 60.0
        info["detail"] = f"max rel error {worst:.2e}, {elapsed:.1f} s"


def test_afp_memorization_and_determinism(mem_corpus):
    with criterion("AFP memorization: 10 utts, 5000 iters, L1 < 0.05, "
                   "bit-identical traces, < 10 min") as info:
        _, records, _ = mem_corpus
        start = time.monotonic()
        cfg = TrainConfig(max_iterations=5000, seed=11)
        ckpt_a, trace_a = afp_train(records, cfg)
        final = evaluate_loss(ckpt_a, records)
        assert final < 0.05, f"training L1 {final:.4f}"
        _, trace_b = afp_train(records, cfg)
        assert trace_a == trace_b
        elapsed = time.monotonic() - start
        assert elapsed < 600.0
        info["detail"] = f"L1 {final:.4f}, {elapsed:.0f} s for two runs"


def _assert_disentangled(report, feature):
    shifts = sorted(report.deltas[feature])
    assert 0.0 in shifts
    on = [report.deltas[feature][s].mean for s in shifts]
    assert report.deltas[feature][0.0].mean == 0.0
    assert report.deltas[feature][0.0].std == 0.0
    assert all(a < b for a, b in zip(on, on[1:])), f"{feature} not monotone: {on}"
    worst_off = 0.0
    for other in FEATURE_NAMES:
        if other == feature:
            continue
        base = report.baselines[other]
        for s in shifts:
            rel = abs(report.deltas[other][s].mean) / base
            worst_off = max(worst_off, rel)
            assert rel < 0.03, f"editing {feature}, {other} moved {rel:.3%} at {s}"
    return worst_off


def test_disentanglement(demo_env, trained_ckpt):
    with criterion("Disentanglement: monotone on-target, zero at 0, "
                   "off-target < 3% (all features)") as info:
        cfg = SynthConfig(seed=31)
        worst = 0.0
        for feature in FEATURE_NAMES:
            report = run_disentanglement(demo_env.utts, trained_ckpt, demo_env.stats,
                                         cfg, feature=feature)
            worst = max(worst, _assert_disentangled(report, feature))
        info["detail"] = f"20 utterances, worst off-target {worst:.3%}"


def test_temporal_precision(demo_env, trained_ckpt):
    with criterion("Temporal precision: modified monotone, unmodified < 3%, "
                   "durations exact") as info:
        cfg = SynthConfig(seed=32)
        worst = 0.0
        for feature in FEATURE_NAMES:
            report = run_temporal_precision(demo_env.utts, trained_ckpt, demo_env.stats,
                                            cfg, feature=feature, fraction=0.5, seed=8)
            shifts = sorted(report.deltas[f"modified/{feature}"])
            mod = [report.deltas[f"modified/{feature}"][s].mean for s in shifts]
            assert all(a < b for a, b in zip(mod, mod[1:])), f"{feature}: {mod}"
            for other in FEATURE_NAMES:
                base = report.baselines[f"unmodified/{other}"]
                for s in shifts:
                    rel = abs(report.deltas[f"unmodified/{other}"][s].mean) / base
                    worst = max(worst, rel)
                    assert rel < 0.03, (feature, other, s, rel)
            for s in shifts:
                st = report.deltas["unmodified/duration"][s]
                assert st.mean == 0.0 and st.std == 0.0
        info["detail"] = f"worst unmodified drift {worst:.3%}"


def test_reproducibility_across_seeds(mem_corpus):
    with criterion("Reproducibility: 3 seeds agree in sign and monotonicity") as info:
        utts, records, stats = mem_corpus
        cfg = SynthConfig(seed=33)
        train_cfg = TrainConfig(max_iterations=800, seed=0)
        for feature in FEATURE_NAMES:
            result = run_reproducibility(records, utts[:6], stats, cfg, train_cfg,
                                         seeds=[101, 202, 303], feature=feature)
            curves = {seed: [rep.deltas[feature][s].mean
                             for s in sorted(rep.deltas[feature])]
                      for seed, rep in result.reports.items()}
            for seed, curve in curves.items():
                assert all(a < b for a, b in zip(curve, curve[1:])), \
                    f"{feature} seed {seed}: {curve}"
            for point in zip(*curves.values()):
                signs = {np.sign(v) for v in point}
                assert len(signs) == 1, f"{feature}: sign disagreement {point}"
        info["detail"] = "3 seeds x 3 features, 5-point grids"


def _gl_signals():
    rng = np.random.default_rng(4)
    t = np.arange(int(0.7 * SR)) / SR
    f0 = 150 + 50 * np.sin(2 * np.pi * 1.7 * t)
    phase = 2 * np.pi * np.cumsum(f0) / SR
    harm = sum(np.sin(k * phase) / k for k in range(1, 6))
    yield 0.3 * harm / np.abs(harm).max()
    yield 0.2 * rng.standard_normal(len(t))
    yield 0.4 * np.sin(2 * np.pi * 220 * t) * (0.3 + 0.7 * np.abs(np.sin(2 * np.pi * 3 * t)))
    mixed = harm * (0.2 + 0.8 * rng.uniform(size=len(t))) + 0.05 * rng.standard_normal(len(t))
    yield 0.3 * mixed / np.abs(mixed).max()
    clicks = np.zeros(len(t))
    clicks[::2205] = 1.0
    yield 0.5 * np.convolve(clicks, np.hanning(64), mode="same")


def test_griffin_lim_monotone():
    with criterion("Griffin-Lim: error non-increasing over 60 iters, 5 signals") as info:
        worst_rise = 0.0
        for k, sig in enumerate(_gl_signals()):
            audio = AudioBuffer(sig, SR)
            grid = FrameGrid.for_signal(len(audio))
            mel = mel_spectrogram(audio, grid)
            _, errors = griffin_lim_trace(mel, n_iters=60, seed=k)
            rises = np.diff(errors)
            worst_rise = max(worst_rise, float(rises.max(initial=0.0)))
            assert np.all(rises <= 1e-6), f"signal {k}: max rise {rises.max():.2e}"
            assert errors[-1] < errors[0]
        info["detail"] = f"worst per-step rise {worst_rise:.2e}"


def test_mushra_pipeline():
    with criterion("MUSHRA: filter rule, Holm hand case, Welch vs scipy 1e-9") as info:
        records = []

        def screen(listener, sid, ref, others):
            rows = [RatingRecord(listener, sid, "REF", ref, True)]
            rows += [RatingRecord(listener, sid, name, val) for name, val in others.items()]
            return rows

        # hand-computed: l1 (0 fails /4) keep, l2 (1/4) keep, l3 (2/4) keep,
        # l4 (3/4) reject, l5 ties on all (4/4) reject, l6 never highest reject
        for listener, n_fail in (("l1", 0), ("l2", 1), ("l3", 2), ("l4", 3)):
            for k in range(4):
                if k < n_fail:
                    records += screen(listener, f"s{k}", 50, {"A": 90, "B": 20})
                else:
                    records += screen(listener, f"s{k}", 100, {"A": 40, "B": 20})
        for k in range(4):
            records += screen("l5", f"s{k}", 70, {"A": 70, "B": 30})
            records += screen("l6", f"s{k}", 10, {"A": 80, "B": 90})
        kept, rejected = filter_listeners(records)
        assert kept == ["l1", "l2", "l3"]
        assert rejected == ["l4", "l5", "l6"]

        np.testing.assert_allclose(holm_bonferroni([0.01, 0.03, 0.04]),
                                   [0.03, 0.06, 0.06])

        fixtures = [
            ([60, 70, 80], [40, 50, 60]),
            ([100, 90, 80, 95], [70, 75, 72, 68, 71]),
            ([10, 30, 20, 40, 25], [22, 28, 30, 26]),
        ]
        worst = 0.0
        for a, b in fixtures:
            t, p = welch_t_test(a, b)
            oracle = scipy.stats.ttest_ind(a, b, equal_var=False)
            worst = max(worst, abs(t - oracle.statistic), abs(p - oracle.pvalue))
            assert abs(t - oracle.statistic) < 1e-9
            assert abs(p - oracle.pvalue) < 1e-9
        info["detail"] = f"worst Welch deviation {worst:.1e}"


def test_replay_determinism(demo_env, trained_ckpt):
    with criterion("Replay determinism: same base + script, bit-identical audio") as info:
        state = ServiceState(
            utterances={u.utterance_id: u for u in demo_env.utts},
            ckpt=trained_ckpt, stats=demo_env.stats, synth_cfg=SynthConfig(seed=34))
        client = TestClient(create_app(state))
        utt_id = demo_env.utts[0].utterance_id
        ops = [{"selector": "all_phones", "feature": "f0", "action": {"shift_sigma": 0.4}},
               {"selector": "all_phones", "feature": "duration",
                "action": {"shift_sigma": -0.25}}]

        def render_once():
            view = client.post("/sessions", json={"utterance_id": utt_id}).json()
            sid = view["session_id"]
            r = client.post(f"/sessions/{sid}/edits", json={"revision": 0, "ops": ops})
            assert r.status_code == 200
            body = client.post(f"/sessions/{sid}/synthesize").json()
            return client.get(body["audio_url"]).content

        wav1 = render_once()
        wav2 = render_once()
        assert wav1 == wav2
        info["detail"] = f"{len(wav1)} bytes identical"

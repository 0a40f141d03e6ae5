import numpy as np
import pytest

from prosoctl.control import (EditError, EditOp, EditScript, apply_edits,
                              duration_floor_z, select_stressed_vowel_subset)
from prosoctl.corpus import AlignmentSpan, PhoneToken, Utterance
from prosoctl.features import (DURATION, ENERGY, F0, NORMALIZED, FeatureStats,
                               PhoneFeatures, SpeakerStats)


def utterance():
    toks = [
        PhoneToken("o", stressed=True, span=AlignmentSpan(0, 9)),
        PhoneToken("l", span=AlignmentSpan(10, 14)),
        PhoneToken("<wb>", kind="word_boundary"),
        PhoneToken("a", stressed=True, span=AlignmentSpan(15, 26)),
        PhoneToken("s", span=AlignmentSpan(27, 33)),
        PhoneToken("e", stressed=True, span=AlignmentSpan(34, 40)),
        PhoneToken("i", stressed=True, span=AlignmentSpan(41, 50)),
    ]
    return Utterance(utterance_id="u1", speaker_id="s", phones=toks)


def stats():
    return SpeakerStats(
        speaker_id="s",
        f0=FeatureStats(mean=180.0, std=30.0, count=50),
        energy=FeatureStats(mean=0.1, std=0.03, count=50),
        duration=FeatureStats(mean=9.0, std=3.0, count=50),
        stats_version="v1",
    )


def features(utt):
    rng = np.random.default_rng(0)
    vals = rng.uniform(-0.5, 0.5, (len(utt.phones), 3))
    vals[2] = 0.0  # boundary
    return PhoneFeatures(vals, NORMALIZED, stats_version="v1")


def test_zero_shift_is_identity():
    utt = utterance()
    feats = features(utt)
    script = EditScript([EditOp("f0", "shift_sigma", 0.0)])
    out = apply_edits(feats, script, utt, stats())
    np.testing.assert_array_equal(out.values, feats.values)


def test_all_phones_f0_shift():
    utt = utterance()
    feats = features(utt)
    script = EditScript([EditOp("f0", "shift_sigma", 0.25)])
    out = apply_edits(feats, script, utt, stats())
    phone_rows = [i for i, t in enumerate(utt.phones) if not t.is_boundary]
    for i in phone_rows:
        assert out.values[i, F0] == feats.values[i, F0] + 0.25
    np.testing.assert_array_equal(out.values[:, ENERGY], feats.values[:, ENERGY])
    np.testing.assert_array_equal(out.values[:, DURATION], feats.values[:, DURATION])
    assert np.array_equal(out.values[2], np.zeros(3))  # boundary untouched


def test_duration_clamped_to_one_frame():
    utt = utterance()
    st = stats()
    feats = features(utt)
    feats.values[:, DURATION] = -2.2  # denormalized: 9 - 6.6 = 2.4 frames
    script = EditScript([EditOp("duration", "shift_sigma", -0.5)])
    out = apply_edits(feats, script, utt, st)
    floor = duration_floor_z(st)
    phone_rows = [i for i, t in enumerate(utt.phones) if not t.is_boundary]
    for i in phone_rows:
        assert out.values[i, DURATION] == pytest.approx(floor)
        denorm = out.values[i, DURATION] * st.duration.std + st.duration.mean
        assert denorm == pytest.approx(1.0)


def test_set_normalized_and_indices_locality():
    utt = utterance()
    feats = features(utt)
    script = EditScript([EditOp("energy", "set_normalized", 1.5,
                                selector="phone_indices", indices=(3,))])
    out = apply_edits(feats, script, utt, stats())
    assert out.values[3, ENERGY] == 1.5
    mask = np.ones(len(feats), dtype=bool)
    mask[3] = False
    np.testing.assert_array_equal(out.values[mask], feats.values[mask])


def test_scale_raw_round_trips_through_raw_space():
    utt = utterance()
    st = stats()
    feats = features(utt)
    script = EditScript([EditOp("energy", "scale_raw", 2.0,
                                selector="phone_indices", indices=(0,))])
    out = apply_edits(feats, script, utt, st)
    raw_before = feats.values[0, ENERGY] * st.energy.std + st.energy.mean
    raw_after = out.values[0, ENERGY] * st.energy.std + st.energy.mean
    assert raw_after == pytest.approx(2.0 * raw_before, rel=1e-12)


def test_composability_of_shifts():
    utt = utterance()
    feats = features(utt)
    st = stats()
    two = EditScript([EditOp("f0", "shift_sigma", 0.2), EditOp("f0", "shift_sigma", 0.1)])
    one = EditScript([EditOp("f0", "shift_sigma", 0.2 + 0.1)])
    np.testing.assert_allclose(apply_edits(feats, two, utt, st).values,
                               apply_edits(feats, one, utt, st).values, atol=1e-15)


def test_out_of_range_index_rejected():
    utt = utterance()
    feats = features(utt)
    script = EditScript([EditOp("f0", "shift_sigma", 0.1,
                                selector="phone_indices", indices=(99,))])
    with pytest.raises(EditError, match="out of range"):
        apply_edits(feats, script, utt, stats())


def test_unknown_feature_rejected():
    with pytest.raises(EditError, match="unknown feature"):
        EditOp("pitch", "shift_sigma", 0.1)


def test_stressed_subset_deterministic_and_sized():
    utt = utterance()  # 4 stressed vowels at indices 0, 3, 5, 6
    sel = select_stressed_vowel_subset(utt, 0.5, seed=7)
    assert len(sel) == 2
    assert sel == select_stressed_vowel_subset(utt, 0.5, seed=7)
    assert set(sel) <= {0, 3, 5, 6}
    assert select_stressed_vowel_subset(utt, 1.0, seed=1) == [0, 3, 5, 6]


def test_stressed_subset_requires_stressed_vowels():
    utt = Utterance(utterance_id="u", speaker_id="s",
                    phones=[PhoneToken("s", span=AlignmentSpan(0, 5))])
    with pytest.raises(EditError, match="no stressed vowels"):
        select_stressed_vowel_subset(utt, 0.5, seed=0)


def test_script_json_round_trip():
    script = EditScript([
        EditOp("f0", "shift_sigma", 0.25),
        EditOp("energy", "set_normalized", -1.0, selector="phone_indices", indices=(1, 4)),
        EditOp("duration", "shift_sigma", 0.5, selector="stressed_vowels_random",
               fraction=0.3, seed=11),
    ], meta={"author": "test", "note": "round trip"})
    again = EditScript.from_json(script.to_json())
    assert again == script

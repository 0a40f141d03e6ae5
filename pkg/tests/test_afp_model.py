import numpy as np
import pytest

from prosoctl.afp import (AfpCheckpoint, AfpDims, UnknownSpeakerError, afp_forward,
                          afp_loss, init_checkpoint, load_checkpoint, save_checkpoint)
from prosoctl.afp.model import CheckpointError, forward_core
from prosoctl.corpus import PhoneToken

DIMS = AfpDims(phone_dim=6, speaker_dim=3, block1_hidden=4, block2_hidden=3, dense_dim=4)


def tiny_ckpt(seed=0):
    return init_checkpoint(["a", "e", "o"], ["s1", "s2"], seed=seed, dims=DIMS)


def test_forward_length_and_bound():
    ckpt = tiny_ckpt()
    tokens = [PhoneToken(s) for s in ["a", "e", "o", "a"]]
    out = afp_forward(ckpt, tokens, "s1")
    assert len(out) == 4
    bound = np.abs(ckpt.params["proj_W"]).sum(axis=1) + np.abs(ckpt.params["proj_b"])
    assert np.all(np.abs(out.values) <= bound[None, :])


def test_single_token():
    ckpt = tiny_ckpt()
    out = afp_forward(ckpt, [PhoneToken("a")], "s2")
    assert out.values.shape == (1, 3)


def test_zero_weights_output_projection_bias():
    ckpt = tiny_ckpt()
    for k in ckpt.params:
        ckpt.params[k] = np.zeros_like(ckpt.params[k])
    ckpt.params["proj_b"] = np.array([0.3, -0.1, 0.7])
    tokens = [PhoneToken(s) for s in ["a", "o", "e"]]
    out = afp_forward(ckpt, tokens, "s1")
    np.testing.assert_array_equal(out.values, np.tile([0.3, -0.1, 0.7], (3, 1)))


def test_boundary_rows_clamped_to_zero():
    ckpt = tiny_ckpt()
    tokens = [PhoneToken("a"), PhoneToken("<wb>", kind="word_boundary"), PhoneToken("e")]
    out = afp_forward(ckpt, tokens, "s1")
    assert np.array_equal(out.values[1], np.zeros(3))
    assert not np.array_equal(out.values[0], np.zeros(3))


def test_unknown_symbol_maps_to_unk_row():
    ckpt = tiny_ckpt()
    out_unk = afp_forward(ckpt, [PhoneToken("zz")], "s1")
    assert ckpt.symbol_index("zz") == 0
    assert ckpt.symbols[0] == "<unk>"
    out_named = afp_forward(ckpt, [PhoneToken("a")], "s1")
    assert not np.array_equal(out_unk.values, out_named.values)


def test_unknown_speaker_rejected():
    ckpt = tiny_ckpt()
    with pytest.raises(UnknownSpeakerError):
        afp_forward(ckpt, [PhoneToken("a")], "nobody")


def symmetrize(ckpt):
    """Tie backward weights to forward and make input column-halves equal,
    so a palindromic input yields a palindromic output sequence."""
    dims = ckpt.dims
    for l, (d_in, h) in enumerate(dims.layer_plan()):
        for part in ("W", "U", "b"):
            ckpt.params[f"lstm{l}_bw_{part}"] = ckpt.params[f"lstm{l}_fw_{part}"].copy()
        if l > 0:  # input is a [fw, bw] concat; make both halves weighted equally
            W = ckpt.params[f"lstm{l}_fw_W"]
            half = d_in // 2
            W[:, half:] = W[:, :half]
            ckpt.params[f"lstm{l}_bw_W"] = W.copy()
    DW = ckpt.params["dense_W"]
    half = DW.shape[1] // 2
    DW[:, half:] = DW[:, :half]


def test_palindrome_input_reversal_symmetry():
    ckpt = tiny_ckpt(seed=3)
    symmetrize(ckpt)
    tokens = [PhoneToken(s) for s in ["a", "e", "o", "e", "a"]]
    out = afp_forward(ckpt, tokens, "s1")
    np.testing.assert_allclose(out.values, out.values[::-1], atol=1e-12)


def test_loss_zero_when_equal():
    pred = np.array([[0.1, -0.2, 0.3], [0.0, 1.0, -1.0]])
    loss, grad = afp_loss(pred, pred.copy())
    assert loss == 0.0
    assert np.all(grad == 0.0)


def test_loss_constant_offset():
    pred = np.zeros((4, 3))
    target = pred - 0.25
    loss, _ = afp_loss(pred, target)
    assert loss == pytest.approx(0.25)


def test_loss_mask_removes_token_exactly():
    pred = np.array([[1.0, 2.0, 3.0], [10.0, 10.0, 10.0]])
    target = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    # hand arithmetic: only token 0 in the loss -> (1+2+3)/3 = 2
    loss, grad = afp_loss(pred, target, mask=[True, False])
    assert loss == pytest.approx(2.0)
    assert np.all(grad[1] == 0.0)
    with pytest.raises(ValueError, match="masked"):
        afp_loss(pred, target, mask=[False, False])


def test_checkpoint_round_trip(tmp_path):
    ckpt = tiny_ckpt(seed=11)
    ckpt.iteration = 123
    ckpt.stats_version = "deadbeef"
    path = tmp_path / "afp.npz"
    save_checkpoint(path, ckpt)
    back = load_checkpoint(path)
    assert back.symbols == ckpt.symbols
    assert back.speakers == ckpt.speakers
    assert back.dims == ckpt.dims
    assert back.iteration == 123
    assert back.stats_version == "deadbeef"
    for k in ckpt.params:
        np.testing.assert_array_equal(back.params[k], ckpt.params[k])
    tokens = [PhoneToken("a"), PhoneToken("e")]
    np.testing.assert_array_equal(afp_forward(back, tokens, "s1").values,
                                  afp_forward(ckpt, tokens, "s1").values)


def test_checkpoint_shape_validation():
    ckpt = tiny_ckpt()
    params = {k: v.copy() for k, v in ckpt.params.items()}
    params["dense_W"] = np.zeros((2, 2))
    with pytest.raises(CheckpointError, match="dense_W"):
        AfpCheckpoint(params=params, symbols=ckpt.symbols, speakers=ckpt.speakers,
                      dims=ckpt.dims, seed=0)

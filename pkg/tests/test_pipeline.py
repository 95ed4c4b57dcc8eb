"""Frame pipeline: pair transforms, runtime switches, stream symmetry."""

import pytest
import torch

from stereocodec import coders
from stereocodec.config import CodecConfig
from stereocodec.disparity import LEFT, RIGHT
from stereocodec.pipeline import (
    VIEWS,
    PairAnalysis,
    PairSynthesis,
    StereoFrameCodec,
    total_bits,
)

CFG = CodecConfig.tiny()


def feature_pair(seed, channels, h, w, batch=1):
    torch.manual_seed(seed)
    return {v: torch.randn(batch, channels, h, w) for v in VIEWS}


def context_pyramid(seed, channels, h, w, batch=1):
    torch.manual_seed(seed)
    return {v: [torch.randn(batch, channels, -(-h // s), -(-w // s))
                for s in (1, 2, 4)]
            for v in VIEWS}


# -- analysis / synthesis shapes ---------------------------------------------

@pytest.mark.parametrize("h,w", [(64, 64), (48, 80), (50, 70)])
def test_analysis_latent_shape(h, w):
    torch.manual_seed(0)
    net = PairAnalysis(3, (8, 12, 16), 8, CFG)
    out = net(feature_pair(1, 3, h, w))
    for v in VIEWS:
        assert out[v].shape == (1, 8, -(-h // 16), -(-w // 16))


def test_conditioned_analysis_consumes_pyramid():
    torch.manual_seed(2)
    net = PairAnalysis(3, (8, 12, 16), 8, CFG, cond_channels=6)
    x = feature_pair(3, 3, 32, 32)
    ctx = context_pyramid(4, 6, 32, 32)
    out = net(x, ctx)
    assert out[LEFT].shape == (1, 8, 2, 2)
    # The pyramid is live input, not dead weight.
    ctx2 = {v: [c + 1.0 for c in ctx[v]] for v in VIEWS}
    assert not torch.equal(net(x, ctx2)[LEFT], out[LEFT])


@pytest.mark.parametrize("h,w", [(64, 64), (50, 70)])
def test_synthesis_crops_to_frame_size(h, w):
    torch.manual_seed(5)
    net = PairSynthesis(8, (8, 12, 16), 5, CFG)
    y_hat = feature_pair(6, 8, -(-h // 16), -(-w // 16))
    out = net(y_hat, (h, w))
    for v in VIEWS:
        assert out[v].shape == (1, 5, h, w)


def test_conditioned_synthesis_consumes_pyramid():
    torch.manual_seed(7)
    net = PairSynthesis(8, (8, 12, 16), 5, CFG, cond_channels=6)
    y_hat = feature_pair(8, 8, 2, 2)
    ctx = context_pyramid(9, 6, 32, 32)
    out = net(y_hat, (32, 32), ctx)
    assert out[RIGHT].shape == (1, 5, 32, 32)
    ctx2 = {v: [c + 1.0 for c in ctx[v]] for v in VIEWS}
    assert not torch.equal(net(y_hat, (32, 32), ctx2)[RIGHT], out[RIGHT])


def test_fresh_enhancers_are_transparent():
    # Enhancer residual branches are built zeroed, so toggling them on a
    # freshly initialized transform must not change anything.
    torch.manual_seed(10)
    net = PairAnalysis(3, (8, 12, 16), 8, CFG)
    x = feature_pair(11, 3, 32, 32)
    with torch.no_grad():
        on = net(x, None, fer_enabled=True)
        off = net(x, None, fer_enabled=False)
    for v in VIEWS:
        assert torch.equal(on[v], off[v])


def test_trained_enhancers_change_the_output():
    torch.manual_seed(12)
    net = PairAnalysis(3, (8, 12, 16), 8, CFG)
    with torch.no_grad():
        torch.nn.init.normal_(net.enhancers["s4"].up.weight, std=0.05)
    x = feature_pair(13, 3, 32, 32)
    with torch.no_grad():
        on = net(x, None, fer_enabled=True)
        off = net(x, None, fer_enabled=False)
    assert not torch.equal(on[LEFT], off[LEFT])


# -- bits bookkeeping ---------------------------------------------------------

def test_total_bits_sums_nested_dicts():
    bits = {
        "motion": {"y": {"L": torch.tensor(2.0), "R": torch.tensor(3.0)},
                   "z": {"L": torch.tensor(1.0), "R": torch.tensor(0.5)}},
        "context": {"y": {"L": torch.tensor(4.0), "R": torch.tensor(5.0)},
                    "z": {"L": torch.tensor(1.5), "R": torch.tensor(1.0)}},
    }
    assert float(total_bits(bits)) == pytest.approx(18.0)


def test_total_bits_rejects_empty():
    with pytest.raises(ValueError):
        total_bits({})


# -- frame codec --------------------------------------------------------------

def make_state(codec, seed=0, h=64, w=64):
    torch.manual_seed(seed)
    frames = {v: torch.rand(1, 3, h, w) for v in VIEWS}
    prev = {v: torch.clamp(frames[v] + 0.02 * torch.randn_like(frames[v]), 0, 1)
            for v in VIEWS}
    with torch.no_grad():
        buffer = codec.init_buffer(prev)
    return frames, buffer


def test_forward_output_contract(tiny_codec):
    model = tiny_codec.frame_codec
    frames, buffer = make_state(model, seed=20)
    with torch.no_grad():
        out = model(frames, buffer)
    assert set(out) == {"x_hat_raw", "x_hat", "features", "flows", "bits"}
    for v in VIEWS:
        assert out["x_hat"][v].shape == frames[v].shape
        assert float(out["x_hat"][v].min()) >= 0.0
        assert float(out["x_hat"][v].max()) <= 1.0
        assert out["features"][v].shape[1] == model.config.feature_channels
        assert out["flows"][v].shape == (1, 2, 64, 64)
    assert set(out["bits"]) == {"motion", "context"}
    for group in out["bits"].values():
        assert set(group) == {"y", "z"}
        for stream in group.values():
            assert set(stream) == set(VIEWS)
    assert float(total_bits(out["bits"])) > 0.0


def test_forward_matches_encode_frame(tiny_codec):
    model = tiny_codec.frame_codec
    frames, buffer = make_state(model, seed=21)
    coder = coders.make_encoder(coders.BYPASS_ID)
    with torch.no_grad():
        fwd = model(frames, buffer)
        enc = model.encode_frame(frames, buffer, coder)
    for v in VIEWS:
        assert torch.equal(fwd["x_hat"][v], enc["x_hat"][v])
    assert float(total_bits(fwd["bits"])) == pytest.approx(
        float(total_bits(enc["bits"])), rel=1e-6)


def test_encode_decode_round_trip_is_bitwise(tiny_codec):
    model = tiny_codec.frame_codec
    frames, buffer = make_state(model, seed=22)
    coder = coders.make_encoder(coders.BYPASS_ID)
    enc = model.encode_frame(frames, buffer, coder)
    blob = coder.finish()
    dec = model.decode_frame(coders.make_decoder(coders.BYPASS_ID, blob),
                             buffer, (64, 64))
    for v in VIEWS:
        assert torch.equal(enc["x_hat"][v], dec["x_hat"][v])
        assert torch.equal(enc["buffer"][v]["feat"], dec["buffer"][v]["feat"])
        assert torch.equal(enc["buffer"][v]["frame"], dec["buffer"][v]["frame"])
        for group in ("motion", "context"):
            assert torch.equal(enc["y_hat"][group][v], dec["y_hat"][group][v])


def test_chained_frames_round_trip(tiny_codec):
    # Decode must track encode across consecutive P-frames, each feeding the
    # next one's buffer.
    model = tiny_codec.frame_codec
    frames, buffer = make_state(model, seed=23)
    enc_buf = dec_buf = buffer
    for step in range(2):
        torch.manual_seed(100 + step)
        frames = {v: torch.rand(1, 3, 64, 64) for v in VIEWS}
        coder = coders.make_encoder(coders.BYPASS_ID)
        enc = model.encode_frame(frames, enc_buf, coder)
        dec = model.decode_frame(
            coders.make_decoder(coders.BYPASS_ID, coder.finish()),
            dec_buf, (64, 64))
        enc_buf, dec_buf = enc["buffer"], dec["buffer"]
        for v in VIEWS:
            assert torch.equal(enc["x_hat"][v], dec["x_hat"][v])


def test_cross_view_property_reaches_both_entropy_models(tiny_codec):
    model = tiny_codec.frame_codec
    assert model.cross_view_enabled
    model.cross_view_enabled = False
    assert not model.motion_entropy.cross_view_enabled
    assert not model.context_entropy.cross_view_enabled
    model.cross_view_enabled = True
    assert model.context_entropy.cross_view_enabled


def test_ablation_mode_is_plumbed_through(tiny_codec):
    model = tiny_codec.frame_codec
    frames, buffer = make_state(model, seed=24)
    with torch.no_grad():
        base = model(frames, buffer)
        model.ablation_mode = "no_shift"
        try:
            ablated = model(frames, buffer)
        finally:
            model.ablation_mode = None
    # Matching inside the entropy models changes, so the coded result does.
    assert not torch.equal(base["x_hat"][LEFT], ablated["x_hat"][LEFT])


def test_unknown_ablation_mode_raises(tiny_codec):
    model = tiny_codec.frame_codec
    frames, buffer = make_state(model, seed=25)
    model.ablation_mode = "sideways"
    try:
        with pytest.raises(ValueError):
            with torch.no_grad():
                model(frames, buffer)
    finally:
        model.ablation_mode = None


def test_init_buffer_contract(tiny_codec):
    model = tiny_codec.frame_codec
    torch.manual_seed(26)
    x_hat = {v: torch.rand(1, 3, 64, 64) for v in VIEWS}
    with torch.no_grad():
        buffer = model.init_buffer(x_hat)
    for v in VIEWS:
        assert torch.equal(buffer[v]["frame"], x_hat[v])
        assert buffer[v]["feat"].shape == (1, model.config.feature_channels, 64, 64)

"""Shipping gate for the stereo codec.

One test per release criterion, ordered cheap to expensive.  Every test
prints a single ``ACCEPTANCE PASS|FAIL <criterion>: <measurement>`` line
(visible with ``pytest -s`` or in the failure report) and asserts at the
pinned tolerance, so the suite doubles as a sign-off checklist.

The core criteria run with the bypass serializer only; nothing here needs
the native range coder.  The coder criteria at the end are skipped when
the shared library has not been built.

The two training criteria at the bottom retrain small models from scratch
and dominate the runtime (roughly an hour single threaded); everything
above them finishes in a few minutes.
"""

import copy
import time

import numpy as np
import pytest
import torch

from stereocodec import coders
from stereocodec.codec import StereoVideoCodec, deterministic_session, pad_frame
from stereocodec.config import CodecConfig
from stereocodec.container import (_HEAD, _TAIL, FRAME_PREDICTED,
                                   ContainerHeader)
from stereocodec.data import SceneParams, clip_batch, generate_clip
from stereocodec.disparity import (SHIFT_MINUS, SHIFT_PLUS, VolumeAggregator,
                                   aggregate, build_shift_volume, match_views,
                                   normalize_score)
from stereocodec.enhance import CrossViewEnhancer
from stereocodec.entropy import quantize_slice, rate_slice
from stereocodec.evaluate import bd_rate, psnr_from_mse, psnr_rgb, yuv420_to_rgb_bt709
from stereocodec.pipeline import VIEWS
from stereocodec.train import (StageConfig, grad_check, intra_reference,
                               loss_reduction, rd_loss, run_stage)

from _causality import check_decode_prefix, check_slice_wiring, small_model


def verdict(name: str, passed: bool, detail: str) -> None:
    print(f"ACCEPTANCE {'PASS' if passed else 'FAIL'} {name}: {detail}")
    assert passed, f"{name}: {detail}"


# -- kernel and scalar contracts ----------------------------------------------


def test_shift_volume_matches_scalar_oracle():
    """Exhaustive agreement with a scalar-indexing oracle, both signs."""
    t0 = time.time()
    rng = np.random.default_rng(0)
    checked = 0
    for c in range(1, 5):
        for h in range(1, 5):
            for w in range(1, 9):
                feats = rng.standard_normal((c, h, w)).astype(np.float32)
                tens = torch.from_numpy(feats)
                for d in range(1, w + 1):
                    for sign in (SHIFT_PLUS, SHIFT_MINUS):
                        got = build_shift_volume(tens, sign, d).numpy()
                        want = np.zeros((d, c, h, w), dtype=np.float32)
                        for k in range(d):
                            for wi in range(w):
                                src = wi + k + 1 if sign == SHIFT_PLUS else wi - k - 1
                                if 0 <= src < w:
                                    want[k, :, :, wi] = feats[:, :, src]
                        if not np.array_equal(got, want):
                            verdict("shift-volume oracle", False,
                                    f"mismatch at C={c} H={h} W={w} D={d} {sign}")
                        checked += 1
    elapsed = time.time() - t0
    verdict("shift-volume oracle", elapsed < 10.0,
            f"{checked} grids exact in {elapsed:.1f}s (limit 10s)")


def test_score_normalization_identity():
    """Zero maps to 0.6 exactly; outputs stay inside the open unit interval.

    The open-interval check runs over the domain where float64 can still
    represent a value strictly below 1: tanh rounds to 1.0 for arguments
    above about 19, so draws mix standard-normal scores with a uniform
    stretch reaching the extreme low tail and up to +15 (1 - f(15) is
    about 2e-13, two decades above the ulp at 1.0).
    """
    zero = float(normalize_score(torch.zeros((), dtype=torch.float64)))
    rng = np.random.default_rng(1)
    x = np.concatenate([rng.standard_normal(500_000),
                        rng.uniform(-700.0, 15.0, 500_000)])
    out = normalize_score(torch.from_numpy(x))
    lo, hi = float(out.min()), float(out.max())
    ok = abs(zero - 0.6) <= 1e-12 and lo > 0.0 and hi < 1.0
    verdict("score normalization", ok,
            f"f(0)={zero!r}, range ({lo:.3e}, {1 - hi:.3e} below 1) on 10^6 values")


def test_quantizer_contract():
    """Integer residual, half-step error bound, idempotence on 10^5 draws."""
    rng = np.random.default_rng(2)
    scale = 10.0 ** rng.uniform(-2, 3, 100_000)
    y = torch.from_numpy(rng.uniform(-1, 1, 100_000) * scale)
    mu = torch.from_numpy(rng.uniform(-1, 1, 100_000) * scale)
    y_hat, delta = quantize_slice(y, mu)
    integer = torch.equal(delta, torch.round(delta))
    worst = float(torch.max(torch.abs(y_hat - y)))
    y_hat2, delta2 = quantize_slice(y_hat, mu)
    idempotent = torch.equal(y_hat2, y_hat) and torch.equal(delta2, delta)
    ok = integer and worst <= 0.5 + 1e-9 and idempotent
    verdict("quantizer contract", ok,
            f"residual integer={integer}, max |err|={worst:.6f} (bound 0.5), "
            f"idempotent={idempotent}")


def test_coding_order_causality():
    """No slice may see data that decodes after it, across 100 fuzz trials."""
    t0 = time.time()
    total = 0
    for num_slices in (1, 2, 4):
        model = small_model(num_slices, seed=num_slices)
        violations = check_slice_wiring(model)
        if violations:
            verdict("coding-order causality", False,
                    f"N={num_slices} wiring: {violations[0]}")
        for trial in range(100):
            violations = check_decode_prefix(model, seed=trial)
            if violations:
                verdict("coding-order causality", False,
                        f"N={num_slices} trial {trial}: {violations[0]}")
            total += 1
    verdict("coding-order causality", True,
            f"0 violations over {total} trials (N=1,2,4) in {time.time() - t0:.1f}s")


def test_gradient_checks():
    """Autograd vs central differences in double precision, three blocks."""
    t0 = time.time()
    torch.manual_seed(0)

    agg = VolumeAggregator(channels=3).double().eval()

    def composite(left, right):
        score, vol_l, vol_r = match_views(left, right, max_shift=3)
        return (aggregate(score, vol_r, agg) + aggregate(score, vol_l, agg)).sum()

    left = torch.randn(1, 3, 4, 6, dtype=torch.float64)
    right = torch.randn(1, 3, 4, 6, dtype=torch.float64)
    err_hdc = grad_check(composite, [left, right], sample=40)

    enh = CrossViewEnhancer(channels=4, max_shift=2).double().eval()
    with torch.no_grad():
        torch.nn.init.normal_(enh.up.weight, std=0.05)
        torch.nn.init.normal_(enh.up.bias, std=0.05)

    def fer_block(a, b):
        out_l, out_r = enh(a, b)
        return (out_l * out_r).sum()

    err_fer = grad_check(fer_block, [torch.randn(1, 4, 6, 8, dtype=torch.float64),
                                     torch.randn(1, 4, 6, 8, dtype=torch.float64)],
                         sample=40)

    def rate(y_hat, mu, sigma):
        return rate_slice(y_hat, mu, torch.abs(sigma) + 0.2)

    err_rate = grad_check(rate, [torch.randn(64, dtype=torch.float64),
                                 torch.randn(64, dtype=torch.float64),
                                 torch.rand(64, dtype=torch.float64) + 0.5],
                          sample=40)
    elapsed = time.time() - t0
    worst = max(err_hdc, err_fer, err_rate)
    ok = worst < 1e-4 and elapsed < 60.0
    verdict("gradient checks", ok,
            f"max rel err: matcher {err_hdc:.2e}, enhancer {err_fer:.2e}, "
            f"rate {err_rate:.2e} (limit 1e-4) in {elapsed:.1f}s (limit 60s)")


# -- curve and metric fixed points ---------------------------------------------


def test_bd_rate_matches_numerical_oracle():
    """Sampled-curve rate delta vs dense numerical integration of the true curves."""
    rng = np.random.default_rng(3)
    worst = 0.0
    for trial in range(20):
        # Analytic pair: log10(rate) quadratic in quality, gentle curvature.
        a0 = rng.uniform(-0.5, 0.5)
        a1 = rng.uniform(0.05, 0.12)
        a2 = rng.uniform(-2e-4, 2e-4)
        shift = rng.uniform(-0.15, 0.15)

        def log_rate_anchor(q):
            return a0 + a1 * q + a2 * q ** 2

        def log_rate_test(q):
            return log_rate_anchor(q) + shift

        q_samples = np.linspace(30.0, 44.0, 8)
        anchor = [(10.0 ** log_rate_anchor(q), q) for q in q_samples]
        test = [(10.0 ** log_rate_test(q), q) for q in q_samples]
        got = bd_rate(anchor, test)

        grid = np.linspace(30.0, 44.0, 200_001)
        avg = np.trapezoid(log_rate_test(grid) - log_rate_anchor(grid),
                           grid) / (grid[-1] - grid[0])
        want = (10.0 ** avg - 1.0) * 100.0
        worst = max(worst, abs(got - want))

    identical = [(0.5, 30.0), (1.1, 34.0), (2.3, 38.0), (4.0, 42.0)]
    zero = bd_rate(identical, identical)
    ok = worst <= 0.1 and zero == 0.0
    verdict("rate-curve comparison", ok,
            f"max |delta| {worst:.4f} pp over 20 analytic pairs (limit 0.1), "
            f"identical curves -> {zero!r}")


def test_metric_fixed_points():
    """PSNR and color conversion hit their closed-form anchor values."""
    ref = np.zeros((8, 8, 3), dtype=np.float64)
    worst_case = psnr_rgb(ref, ref + 255.0)
    # 40 pixels, one differing by exactly 51: MSE = 51^2 / 40 = 65.025.
    flat_ref = np.zeros((40, 1, 3), dtype=np.float64)
    flat_test = flat_ref.copy()
    flat_test[0, 0, :] = 51.0
    thirty = psnr_rgb(flat_ref, flat_test)
    thirty_mse = psnr_from_mse(65.025)

    white = yuv420_to_rgb_bt709(np.full((2, 2), 235.0), np.full((1, 1), 128.0),
                                np.full((1, 1), 128.0))
    black = yuv420_to_rgb_bt709(np.full((2, 2), 16.0), np.full((1, 1), 128.0),
                                np.full((1, 1), 128.0))
    ok = (abs(worst_case) <= 1e-12
          and abs(thirty - 30.0) <= 1e-9
          and abs(thirty_mse - 30.0) <= 1e-12
          and np.all(white == 255) and np.all(black == 0))
    verdict("metric fixed points", ok,
            f"psnr(MSE=255^2)={worst_case:.2e} dB, psnr(MSE=65.025)={thirty:.12f} dB, "
            f"white->{white[0, 0].tolist()}, black->{black[0, 0].tolist()}")


# -- bitstream behaviour --------------------------------------------------------


def test_encoder_decoder_symmetry():
    """Decoding reproduces encoder-side frames and latents bit for bit."""
    t0 = time.time()
    clips = 0
    for seed in range(100):
        rng = np.random.default_rng(1000 + seed)
        codec = StereoVideoCodec.seeded(CodecConfig.tiny(), seed=seed % 4)
        h = int(rng.integers(24, 64))
        w = int(rng.integers(24, 64))
        frames = int(rng.integers(2, 4))
        clip = generate_clip(rng, SceneParams(height=h, width=w, frames=frames))
        gop = int(rng.integers(2, frames + 1))

        result = codec.encode_clip(clip, gop_size=gop)
        header = ContainerHeader(width=w, height=h, frame_count=frames,
                                 gop_size=gop, coder_id=codec.coder_id,
                                 intra_id=codec.intra_id,
                                 config_text=codec.config.to_text(),
                                 weights_digest="", weights_source="")
        decoded = codec.decode_records(header, result["records"])
        for v in VIEWS:
            if not torch.equal(decoded[v], result["recon"][v]):
                verdict("encode/decode symmetry", False,
                        f"clip {seed}: view {v} reconstruction differs")

        # Latent agreement, checked on a fresh P-frame pass of the same clip.
        pad = codec.config.pad_multiple
        padded = {v: torch.nn.functional.pad(
            clip[v][:1], (0, -w % pad, 0, -h % pad), mode="replicate")
            for v in VIEWS}
        with deterministic_session():
            buffer = codec.frame_codec.init_buffer(
                intra_reference({v: padded[v] for v in VIEWS}))
            enc = coders.make_encoder(codec.coder_id)
            target = {v: torch.nn.functional.pad(
                clip[v][1:2], (0, -w % pad, 0, -h % pad), mode="replicate")
                for v in VIEWS}
            out = codec.frame_codec.encode_frame(target, buffer, enc)
            dec = coders.make_decoder(codec.coder_id, enc.finish())
            back = codec.frame_codec.decode_frame(
                dec, buffer, (padded[VIEWS[0]].shape[-2], padded[VIEWS[0]].shape[-1]))
        for group in ("motion", "context"):
            for v in VIEWS:
                if not torch.equal(out["y_hat"][group][v], back["y_hat"][group][v]):
                    verdict("encode/decode symmetry", False,
                            f"clip {seed}: {group} latents for view {v} differ")
        clips += 1
    verdict("encode/decode symmetry", True,
            f"{clips} clips bitwise identical (frames and latents) "
            f"in {time.time() - t0:.0f}s")


def _clone_buffer(buffer: dict) -> dict:
    return {v: {k: t.clone() for k, t in buffer[v].items()} for v in VIEWS}


def test_no_temporal_leakage():
    """Encoding frame t reads only the frame itself and the t-1 buffer.

    A clip is encoded sequentially while each predicted frame's input
    buffer is snapshotted.  The codec is then flooded with sentinel
    content (a constant-valued clip pushed through the same model
    instance), and every predicted frame is replayed in isolation from
    its snapshot.  Bitwise-identical records prove the declared inputs
    are the only temporal channel: hidden state, or any read of earlier
    or later frames, would shift the replayed bytes.  A directly
    constructed sentinel buffer must behave the same way.
    """
    rng = np.random.default_rng(11)
    clip = generate_clip(rng, SceneParams(height=48, width=48, frames=4))
    codec = StereoVideoCodec.seeded(CodecConfig.tiny(), seed=0)
    model = codec.frame_codec

    def padded(source, t):
        return {v: pad_frame(source[v][t: t + 1], codec.config.pad_multiple)
                for v in VIEWS}

    def encode(frames, buffer):
        coder = coders.make_encoder(codec.coder_id)
        out = model.encode_frame(frames, buffer, coder)
        return coder.finish(), out["buffer"]

    with deterministic_session():
        buffer = model.init_buffer(intra_reference(padded(clip, 0)))
        snapshots, records = [], []
        for t in (1, 2, 3):
            snapshots.append(_clone_buffer(buffer))
            record, buffer = encode(padded(clip, t), buffer)
            records.append(record)

        sentinel = {v: torch.full_like(clip[v], 0.5) for v in VIEWS}
        sentinel_buf = model.init_buffer(intra_reference(padded(sentinel, 0)))
        sentinel_rec, _ = encode(padded(clip, 2), _clone_buffer(sentinel_buf))

        # Flood: any hidden per-instance state now holds sentinel values.
        flood = _clone_buffer(sentinel_buf)
        for t in (1, 2, 3):
            _, flood = encode(padded(sentinel, t), flood)

        replayed = sum(
            encode(padded(clip, t), snapshots[t - 1])[0] == records[t - 1]
            for t in (1, 2, 3))
        sentinel_stable = encode(padded(clip, 2), sentinel_buf)[0] == sentinel_rec

    verdict("temporal causality", replayed == 3 and sentinel_stable,
            f"replayed records bitwise identical after sentinel flood: "
            f"{replayed}/3, sentinel-buffer encode reproducible={sentinel_stable}")


def test_bit_accounting(tmp_path):
    """Container bytes reconcile exactly; model-coded bits cover the estimate.

    Two claims.  First, the written file is an exact sum of header,
    segment tables, and segment payloads, and every frame's reported
    payload bits equal its serialized bytes.  Second, a container whose
    symbols are coded with the model's own distribution (the range
    coder) is at least as large as the model's estimated rate.  The
    second claim is skipped under a bypass-only build: the bypass codes
    with fixed universal codes whose length on a miscalibrated model
    may honestly undercut the estimate, so the inequality belongs to
    the coder that actually uses it.
    """
    rng = np.random.default_rng(12)
    clip = generate_clip(rng, SceneParams(height=64, width=64, frames=8))
    codec = StereoVideoCodec.seeded(CodecConfig.tiny(), seed=0)
    path = tmp_path / "accounting.svc"
    result = codec.encode_file(clip, path, gop_size=8)

    expected = (_HEAD.size + len(codec.config.to_text().encode("utf-8"))
                + _TAIL.size
                + sum(2 + 4 * len(r.segments) + r.total_bytes()
                      for r in result["records"]))
    exact = (result["container_bytes"] == path.stat().st_size == expected)
    reported = all(
        row["actual_bits"] == 8.0 * rec.total_bytes()
        for row, rec in zip(result["stats"], result["records"]))

    covered = True
    coverage = "range coder not built, coverage check skipped"
    if coders.RangeLibrary.available():
        rc = StereoVideoCodec.seeded(CodecConfig.tiny(),
                                     coder_id=coders.RANGE_ID, seed=0)
        rc_result = rc.encode_file(clip, tmp_path / "accounting_rc.svc",
                                   gop_size=8)
        file_bits = 8 * rc_result["container_bytes"]
        est = sum(r["estimated_bits"] for r in rc_result["stats"])
        covered = file_bits >= est
        coverage = f"range-coded container {file_bits} bits >= estimate {est:.0f}"

    verdict("bit accounting", exact and reported and covered,
            f"file size reconciles byte-exact={exact}, per-frame payload "
            f"bits match records={reported}, {coverage}")


# -- training behaviour ---------------------------------------------------------

SMOKE_PARAMS = SceneParams(height=64, width=64, frames=2)


def test_training_smoke():
    """200 joint iterations from scratch cut the smoothed RD loss by >= 20%."""
    t0 = time.time()
    codec = StereoVideoCodec.seeded(CodecConfig.tiny(), seed=0)
    losses = run_stage(codec, lambda b, rng: clip_batch(rng, b, SMOKE_PARAMS),
                       StageConfig(stage=4, iterations=200, lr=1e-4, batch_size=2),
                       lam=256.0, seed=0)
    red = loss_reduction(losses)
    verdict("training smoke", red >= 0.20,
            f"smoothed loss reduction {100 * red:.1f}% over 200 iterations "
            f"(floor 20%) in {time.time() - t0:.0f}s")


def _rd_eval(codec, params, lam, seed=999, batches=8, batch_size=4):
    rng = np.random.default_rng(seed)
    model = codec.frame_codec
    model.eval()
    agg = {"loss": 0.0, "mse": 0.0, "bpp": 0.0}
    with torch.no_grad():
        for _ in range(batches):
            batch = clip_batch(rng, batch_size, params)
            ref = intra_reference({v: batch[v][:, 0] for v in VIEWS})
            buffer = model.init_buffer(ref)
            frames = {v: batch[v][:, 1] for v in VIEWS}
            out = model(frames, buffer)
            br = rd_loss(out, frames, lam)
            agg["loss"] += br.scalar()
            agg["mse"] += sum(br.distortion.values())
            agg["bpp"] += sum(br.rate_bpp.values())
    return {k: v / batches for k, v in agg.items()}


CROSS_PARAMS = SceneParams(height=64, width=64, frames=2, view_noise=0.01,
                           background_disparity=(16.0, 24.0),
                           foreground_disparity=(24.0, 32.0))


def test_cross_view_priors_cut_rate():
    """Cross-view priors buy >= 5% rate at matched distortion and budget."""
    t0 = time.time()
    results = {}
    for tag, overrides in (("on", None), ("off", {"cross_view_enabled": False})):
        codec = StereoVideoCodec.seeded(CodecConfig.tiny(), seed=0)
        run_stage(codec, lambda b, rng: clip_batch(rng, b, CROSS_PARAMS),
                  StageConfig(stage=4, iterations=1000, lr=1e-4, batch_size=2),
                  lam=256.0, seed=0, switch_overrides=overrides)
        results[tag] = _rd_eval(codec, CROSS_PARAMS, 256.0)
    rate_ratio = results["on"]["bpp"] / results["off"]["bpp"]
    mse_ratio = results["on"]["mse"] / results["off"]["mse"]
    ok = rate_ratio <= 0.95 and abs(mse_ratio - 1.0) <= 0.05
    verdict("cross-view rate gain", ok,
            f"rate ratio {rate_ratio:.4f} (need <= 0.95) at distortion ratio "
            f"{mse_ratio:.4f} (need within 5%) in {(time.time() - t0) / 60:.0f}min")


FER_PARAMS = SceneParams(height=64, width=64, frames=2, view_noise=0.005,
                         texture_cells=8,
                         background_disparity=(7.0, 9.0),
                         foreground_disparity=(15.0, 17.0))


def test_fer_ablation_trails_full_model():
    """The attention-lesioned matcher costs RD loss in >= 4 of 5 seeds.

    The ablated variant removes the attention scores from the matching
    mechanism everywhere it is used (enhancers and cross-view priors):
    shift planes sum unweighted, so the model loses the ability to pick
    the matching disparity per position.  Both arms share a fully staged
    prefix with a trained matcher, then train 1000 joint iterations on
    identical batch streams at matched lambda, the ablated arm with the
    lesion active so it gets an equal budget to adapt.  Each arm is
    evaluated as configured; the margin is the ablated arm's loss minus
    the full arm's.  (The other lesioned variant, pinning the matcher to
    zero shift, hurts the same way; one directional check gates.)
    """
    t0 = time.time()
    lam = 256.0
    wins = 0
    margins = []
    for seed in range(5):
        codec = StereoVideoCodec.seeded(CodecConfig.tiny(), seed=seed)
        source = lambda b, rng: clip_batch(rng, b, FER_PARAMS)
        for stage, iters in ((1, 800), (2, 400), (3, 300)):
            run_stage(codec, source, StageConfig(stage=stage, iterations=iters,
                                                 lr=1e-4, batch_size=2),
                      lam=lam, seed=seed)
        full, abl = codec, copy.deepcopy(codec)
        run_stage(full, source, StageConfig(stage=4, iterations=1000, lr=1e-4,
                                            batch_size=2), lam=lam, seed=seed)
        run_stage(abl, source, StageConfig(stage=4, iterations=1000, lr=1e-4,
                                           batch_size=2), lam=lam, seed=seed,
                  switch_overrides={"ablation_mode": "no_attention"})
        margin = (_rd_eval(abl, FER_PARAMS, lam)["loss"]
                  - _rd_eval(full, FER_PARAMS, lam)["loss"])
        margins.append(round(margin, 4))
        wins += margin > 0
    verdict("matcher ablation", wins >= 4,
            f"full model ahead in {wins}/5 seeds (need >= 4), margins {margins} "
            f"in {(time.time() - t0) / 60:.0f}min")


# -- native coder criteria (skipped until the shared library is built) ----------

needs_rangecoder = pytest.mark.skipif(
    not coders.RangeLibrary.available(),
    reason="native range coder library not built")


@needs_rangecoder
def test_range_coder_fuzz_roundtrip():
    """10^4 mixed-alphabet symbols, escapes included, decode losslessly."""
    lib_total = 0
    rng = np.random.default_rng(20)
    for case in range(100):
        n = int(rng.integers(50, 250))
        sigma = np.exp(rng.uniform(np.log(0.15), np.log(80.0), n)).astype(np.float32)
        mu = rng.normal(0.0, 10.0, n).astype(np.float32)
        symbols = np.round(rng.normal(0.0, 1.0, n) * sigma + mu).astype(np.int32)
        wild = rng.random(n) < 0.03
        symbols[wild] = rng.integers(-10 ** 6, 10 ** 6, int(wild.sum()))
        data = coders.rc_encode_array(symbols, mu, sigma)
        back = coders.rc_decode_array(data, len(symbols), mu, sigma)
        if not np.array_equal(back, symbols):
            verdict("range coder round trip", False, f"case {case} diverged")
        lib_total += n
    verdict("range coder round trip", True,
            f"{lib_total} symbols across 100 streams lossless")


@needs_rangecoder
def test_range_coder_efficiency():
    """A 10^5-symbol stream lands within 1% of its ideal code length."""
    from scipy.special import ndtr

    rng = np.random.default_rng(21)
    n = 100_000
    sigma = np.exp(rng.uniform(np.log(0.2), np.log(32.0), n)).astype(np.float32)
    symbols = np.round(rng.normal(0.0, 1.0, n) * sigma).astype(np.int32)
    s64 = sigma.astype(np.float64)
    v64 = symbols.astype(np.float64)
    mass = ndtr((v64 + 0.5) / s64) - ndtr((v64 - 0.5) / s64)
    ideal = float(-np.log2(np.clip(mass, 1e-300, None)).sum())
    enc = coders.RangeStreamEncoder()
    enc.push_gaussian(symbols, sigma)
    actual = len(enc.finish()) * 8
    ratio = actual / ideal
    verdict("range coder efficiency", ratio <= 1.01,
            f"{actual} bits vs ideal {ideal:.0f} (ratio {ratio:.5f}, limit 1.01)")


@needs_rangecoder
def test_range_coder_determinism():
    """Byte-for-byte stability, the single-box proxy for cross-platform runs.

    The coder core avoids every platform-varying operation (no libm in the
    coded path, integer state only), and this digest over a mixed workload
    plus the Rust test suite's frozen golden bytes pin the output; a port
    or rebuild on another platform must reproduce both to ship.
    """
    import hashlib

    rng = np.random.default_rng(42)
    n = 4096
    sigma = np.exp(rng.uniform(np.log(0.15), np.log(50.0), n)).astype(np.float32)
    symbols = np.round(rng.normal(0.0, 1.0, n) * sigma).astype(np.int32)
    enc = coders.RangeStreamEncoder()
    enc.push_gaussian(symbols, sigma)
    digest = hashlib.sha256(enc.finish()).hexdigest()
    want = "3b44daa4e8943b46b81b5a4a416fbc965ade93ce4009a30127b0515118880c32"
    verdict("range coder determinism", digest == want,
            f"workload digest {digest[:16]}.. (frozen reference)")


@needs_rangecoder
def test_range_coded_container_tracks_estimate():
    """Real container payload within 1% of the model's estimated bits."""
    rng = np.random.default_rng(21)
    clip = generate_clip(rng, SceneParams(height=64, width=64, frames=16))
    codec = StereoVideoCodec.seeded(CodecConfig.tiny(), coders.RANGE_ID, seed=0)
    result = codec.encode_clip(clip, gop_size=16)
    rows = [r for r in result["stats"] if r["type"] == FRAME_PREDICTED]
    actual = sum(r["actual_bits"] for r in rows)
    estimated = sum(r["estimated_bits"] for r in rows)
    gap = abs(actual - estimated) / estimated
    verdict("coded payload tracks estimate", gap <= 0.01,
            f"{actual:.0f} payload vs {estimated:.0f} estimated bits over "
            f"{len(rows)} frames (gap {100 * gap:.2f}%, limit 1%)")

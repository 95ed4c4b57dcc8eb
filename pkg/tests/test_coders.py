"""Stream serializer backends and probability table quantization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stereocodec.coders import (
    BYPASS_ID,
    CDF_TOTAL,
    CODER_IDS,
    CODER_NAMES,
    RANGE_ID,
    BypassStreamDecoder,
    BypassStreamEncoder,
    coder_available,
    make_decoder,
    make_encoder,
    quantize_pmf_to_cdf,
)


def test_cdf_rows_sum_to_exactly_two_to_sixteen():
    rng = np.random.default_rng(0)
    pmf = rng.dirichlet(np.ones(17), size=8)
    cdf = quantize_pmf_to_cdf(pmf)
    assert cdf.dtype == np.uint32
    assert cdf.shape == (8, 19)  # alphabet + escape + leading zero
    assert np.all(cdf[:, 0] == 0)
    assert np.all(cdf[:, -1] == CDF_TOTAL)


def test_cdf_every_symbol_gets_nonzero_frequency():
    # A spiky distribution must not starve the other symbols or the escape.
    pmf = np.zeros((1, 9))
    pmf[0, 4] = 1.0
    cdf = quantize_pmf_to_cdf(pmf)
    freqs = np.diff(cdf[0].astype(np.int64))
    assert freqs.min() >= 1
    assert freqs.sum() == CDF_TOTAL
    assert freqs[4] > CDF_TOTAL - 32


def test_cdf_subnormalized_rows_feed_the_escape():
    pmf = np.full((1, 4), 0.2)  # total 0.8, escape gets ~0.2
    cdf = quantize_pmf_to_cdf(pmf)
    freqs = np.diff(cdf[0].astype(np.int64))
    assert freqs[-1] == pytest.approx(0.2 * CDF_TOTAL, rel=0.01)


def test_cdf_is_deterministic_and_tie_stable():
    pmf = np.tile(np.full(5, 0.2), (3, 1))
    a = quantize_pmf_to_cdf(pmf)
    b = quantize_pmf_to_cdf(pmf.copy())
    np.testing.assert_array_equal(a, b)
    # All-equal masses split the budget as evenly as integers allow; the
    # trailing escape slot keeps its mass-zero floor of one.
    freqs = np.diff(a[0].astype(np.int64))
    assert freqs[:-1].max() - freqs[:-1].min() <= 1
    assert freqs[-1] >= 1


@given(st.integers(2, 40), st.integers(0, 2 ** 31 - 1), st.floats(0.0, 1.0))
@settings(max_examples=120, deadline=None)
def test_cdf_properties_random(alphabet, seed, scale):
    rng = np.random.default_rng(seed)
    pmf = rng.dirichlet(np.ones(alphabet), size=2) * scale
    cdf = quantize_pmf_to_cdf(pmf)
    diffs = np.diff(cdf.astype(np.int64), axis=1)
    assert np.all(diffs >= 1)
    assert np.all(cdf[:, -1] == CDF_TOTAL)


def test_bypass_round_trip_mixed_pushes():
    rng = np.random.default_rng(1)
    enc = BypassStreamEncoder()
    gauss = rng.integers(-50, 51, 300).astype(np.int32)
    sig = rng.uniform(0.2, 5.0, 300).astype(np.float32)
    idx_syms = rng.integers(-10, 11, 64).astype(np.int32)
    pmf = np.full((4, 21), 1.0 / 21)
    idx = rng.integers(0, 4, 64).astype(np.int32)
    enc.push_gaussian(gauss, sig)
    enc.push_indexed(idx_syms, pmf, idx, -10)
    enc.push_gaussian(gauss[:10], sig[:10])
    blob = enc.finish()

    dec = BypassStreamDecoder(blob)
    np.testing.assert_array_equal(dec.read_gaussian(300, sig), gauss)
    np.testing.assert_array_equal(dec.read_indexed(64, pmf, idx, -10), idx_syms)
    np.testing.assert_array_equal(dec.read_gaussian(10, sig[:10]), gauss[:10])


def test_bypass_ignores_distributions():
    syms = np.array([3, -4, 0], dtype=np.int32)
    enc_a = BypassStreamEncoder()
    enc_a.push_gaussian(syms, np.full(3, 0.5, dtype=np.float32))
    enc_b = BypassStreamEncoder()
    enc_b.push_gaussian(syms, np.full(3, 9.0, dtype=np.float32))
    assert enc_a.finish() == enc_b.finish()


def test_bypass_empty_stream():
    enc = BypassStreamEncoder()
    enc.push_gaussian(np.array([], dtype=np.int32), np.array([], dtype=np.float32))
    blob = enc.finish()
    assert blob == b""
    dec = BypassStreamDecoder(blob)
    assert dec.read_gaussian(0, np.array([], dtype=np.float32)).size == 0


def test_factory_and_registry():
    assert CODER_NAMES[BYPASS_ID] == "bypass"
    assert CODER_IDS["range"] == RANGE_ID
    assert isinstance(make_encoder(BYPASS_ID), BypassStreamEncoder)
    assert isinstance(make_decoder(BYPASS_ID, b""), BypassStreamDecoder)
    with pytest.raises(ValueError):
        make_encoder(99)
    with pytest.raises(ValueError):
        make_decoder(99, b"")
    assert coder_available(BYPASS_ID)
    assert not coder_available(17)

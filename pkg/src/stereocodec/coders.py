"""Symbol stream serializers.

The entropy model emits integer symbols together with their model
distributions (per-symbol Gaussian scales, or indexed rows of a shared
probability table).  Two interchangeable stream backends turn those symbols
into bytes:

* ``bypass`` (always available): byte-aligned signed Exp-Golomb codes from
  :mod:`stereocodec._kernels`.  The model distributions are ignored, so the
  stream is longer than the model estimate, but the package stays fully
  self-contained.
* ``range`` (optional): a binary range coder from the companion
  ``rangecoder`` native library, driven through its C interface.  Streams
  land within about a percent of the model estimate.

Both backends implement the same small interface: an encoder with
``push_gaussian`` / ``push_indexed`` / ``finish`` and a decoder with
``read_gaussian`` / ``read_indexed``.  Calls must be mirrored exactly
between encoder and decoder; the container records which backend wrote each
stream.
"""

import ctypes
import os
from pathlib import Path

import numpy as np

from stereocodec import _kernels

BYPASS_ID = 0
RANGE_ID = 1
CODER_NAMES = {BYPASS_ID: "bypass", RANGE_ID: "range"}
CODER_IDS = {name: cid for cid, name in CODER_NAMES.items()}

CDF_TOTAL = 1 << 16


def quantize_pmf_to_cdf(pmf: np.ndarray) -> np.ndarray:
    """Quantize per-row probabilities to integer cumulative tables.

    ``pmf`` has shape ``[K, L]``; each row is the probability of the ``L``
    alphabet symbols and may sum to less than one.  The remainder becomes an
    escape symbol appended at index ``L``.  Every symbol receives frequency
    at least 1 and each row's frequencies sum to exactly ``2**16``;
    fractional parts are resolved largest-remainder-first with ties broken
    by symbol index.  Returns ``uint32`` cumulative rows of length
    ``L + 2`` (leading zero, trailing total).
    """
    pmf = np.asarray(pmf, dtype=np.float64)
    rows, alphabet = pmf.shape
    symbols = alphabet + 1  # escape included
    out = np.zeros((rows, symbols + 1), dtype=np.uint32)
    budget = CDF_TOTAL - symbols
    for i in range(rows):
        masses = np.clip(pmf[i], 0.0, None)
        escape = max(1.0 - masses.sum(), 0.0)
        m = np.append(masses, escape)
        total = m.sum()
        scaled = m * (budget / total) if total > 0 else np.full(symbols, budget / symbols)
        base = np.floor(scaled).astype(np.int64)
        remainder = scaled - base
        deficit = budget - int(base.sum())
        order = np.argsort(-remainder, kind="stable")
        base[order[:deficit]] += 1
        out[i, 1:] = np.cumsum(base + 1)
    return out


# -- bypass backend ---------------------------------------------------------


class BypassStreamEncoder:
    """Exp-Golomb encoder; model distributions are accepted and ignored."""

    def __init__(self):
        self._chunks = []

    def push_gaussian(self, symbols: np.ndarray, sigma: np.ndarray) -> None:
        self._chunks.append(_kernels.encode_signed(np.ascontiguousarray(symbols, np.int32)))

    def push_indexed(self, symbols: np.ndarray, pmf: np.ndarray,
                     indexes: np.ndarray, lo: int) -> None:
        self._chunks.append(_kernels.encode_signed(np.ascontiguousarray(symbols, np.int32)))

    def finish(self) -> bytes:
        return b"".join(self._chunks)


class BypassStreamDecoder:
    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def _read(self, count: int) -> np.ndarray:
        values, self._pos = _kernels.decode_signed(self._data, self._pos, count)
        return values

    def read_gaussian(self, count: int, sigma: np.ndarray) -> np.ndarray:
        return self._read(count)

    def read_indexed(self, count: int, pmf: np.ndarray, indexes: np.ndarray,
                     lo: int) -> np.ndarray:
        return self._read(count)


# -- range coder backend ------------------------------------------------------


def _candidate_library_paths() -> list[Path]:
    override = os.environ.get("STEREOCODEC_RANGECODER_LIB")
    if override:
        return [Path(override)]
    names = ["librangecoder.so", "librangecoder.dylib", "rangecoder.dll"]
    roots = []
    here = Path(__file__).resolve()
    for up in (3, 2):
        if len(here.parents) > up:
            roots.append(here.parents[up] / "rangecoder" / "target" / "release")
    roots.append(Path.cwd() / "rangecoder" / "target" / "release")
    return [root / name for root in roots for name in names]


class RangeLibrary:
    """ctypes bridge to the native range coder, loaded lazily once."""

    _instance = None
    _failed: str | None = None

    def __init__(self, lib: ctypes.CDLL):
        self.lib = lib
        u8p = ctypes.POINTER(ctypes.c_uint8)
        i32p = ctypes.POINTER(ctypes.c_int32)
        f32p = ctypes.POINTER(ctypes.c_float)
        u32p = ctypes.POINTER(ctypes.c_uint32)
        sz = ctypes.c_size_t
        szp = ctypes.POINTER(sz)
        lib.rc_encode.argtypes = [i32p, sz, f32p, f32p, u8p, sz, szp]
        lib.rc_encode.restype = ctypes.c_int32
        lib.rc_decode.argtypes = [u8p, sz, sz, f32p, f32p, i32p]
        lib.rc_decode.restype = ctypes.c_int32
        lib.rc_encoder_new.restype = ctypes.c_void_p
        lib.rc_encoder_push_gaussian.argtypes = [ctypes.c_void_p, i32p, sz, f32p]
        lib.rc_encoder_push_gaussian.restype = ctypes.c_int32
        lib.rc_encoder_push_indexed.argtypes = [ctypes.c_void_p, i32p, sz, u32p,
                                                sz, sz, i32p, ctypes.c_int32]
        lib.rc_encoder_push_indexed.restype = ctypes.c_int32
        lib.rc_encoder_finish.argtypes = [ctypes.c_void_p]
        lib.rc_encoder_finish.restype = ctypes.c_int32
        lib.rc_encoder_data.argtypes = [ctypes.c_void_p, ctypes.POINTER(u8p), szp]
        lib.rc_encoder_data.restype = ctypes.c_int32
        lib.rc_encoder_free.argtypes = [ctypes.c_void_p]
        lib.rc_encoder_free.restype = None
        lib.rc_decoder_new.argtypes = [u8p, sz]
        lib.rc_decoder_new.restype = ctypes.c_void_p
        lib.rc_decoder_read_gaussian.argtypes = [ctypes.c_void_p, sz, f32p, i32p]
        lib.rc_decoder_read_gaussian.restype = ctypes.c_int32
        lib.rc_decoder_read_indexed.argtypes = [ctypes.c_void_p, sz, u32p, sz, sz,
                                                i32p, i32p, ctypes.c_int32]
        lib.rc_decoder_read_indexed.restype = ctypes.c_int32
        lib.rc_decoder_free.argtypes = [ctypes.c_void_p]
        lib.rc_decoder_free.restype = None

    @classmethod
    def load(cls) -> "RangeLibrary":
        if cls._instance is not None:
            return cls._instance
        if cls._failed is not None:
            raise RuntimeError(cls._failed)
        for path in _candidate_library_paths():
            if path.is_file():
                cls._instance = cls(ctypes.CDLL(str(path)))
                return cls._instance
        cls._failed = (
            "range coder library not found; build it with "
            "'cargo build --release' in the rangecoder directory or set "
            "STEREOCODEC_RANGECODER_LIB")
        raise RuntimeError(cls._failed)

    @classmethod
    def available(cls) -> bool:
        try:
            cls.load()
            return True
        except RuntimeError:
            return False


def _i32ptr(a: np.ndarray):
    return a.ctypes.data_as(ctypes.POINTER(ctypes.c_int32))


def _f32ptr(a: np.ndarray):
    return a.ctypes.data_as(ctypes.POINTER(ctypes.c_float))


def _u32ptr(a: np.ndarray):
    return a.ctypes.data_as(ctypes.POINTER(ctypes.c_uint32))


def _check(status: int, what: str) -> None:
    if status != 0:
        raise ValueError(f"range coder {what} failed with status {status}")


class RangeStreamEncoder:
    def __init__(self):
        self._rl = RangeLibrary.load()
        self._handle = self._rl.lib.rc_encoder_new()
        if not self._handle:
            raise RuntimeError("could not create range encoder")

    def push_gaussian(self, symbols: np.ndarray, sigma: np.ndarray) -> None:
        symbols = np.ascontiguousarray(symbols, np.int32)
        sigma = np.ascontiguousarray(sigma, np.float32)
        if symbols.size != sigma.size:
            raise ValueError("symbols and sigma must have equal length")
        _check(self._rl.lib.rc_encoder_push_gaussian(
            self._handle, _i32ptr(symbols), symbols.size, _f32ptr(sigma)),
            "push_gaussian")

    def push_indexed(self, symbols: np.ndarray, pmf: np.ndarray,
                     indexes: np.ndarray, lo: int) -> None:
        symbols = np.ascontiguousarray(symbols, np.int32)
        indexes = np.ascontiguousarray(indexes, np.int32)
        if indexes.size != symbols.size:
            raise ValueError("symbols and indexes must have equal length")
        cdf = np.ascontiguousarray(quantize_pmf_to_cdf(pmf))
        _check(self._rl.lib.rc_encoder_push_indexed(
            self._handle, _i32ptr(symbols), symbols.size, _u32ptr(cdf),
            cdf.shape[0], cdf.shape[1], _i32ptr(indexes), lo), "push_indexed")

    def finish(self) -> bytes:
        _check(self._rl.lib.rc_encoder_finish(self._handle), "finish")
        ptr = ctypes.POINTER(ctypes.c_uint8)()
        length = ctypes.c_size_t()
        _check(self._rl.lib.rc_encoder_data(
            self._handle, ctypes.byref(ptr), ctypes.byref(length)), "data")
        data = ctypes.string_at(ptr, length.value)
        self._rl.lib.rc_encoder_free(self._handle)
        self._handle = None
        return data


class RangeStreamDecoder:
    def __init__(self, data: bytes):
        self._rl = RangeLibrary.load()
        buf = (ctypes.c_uint8 * len(data)).from_buffer_copy(data)
        self._handle = self._rl.lib.rc_decoder_new(buf, len(data))
        if not self._handle:
            raise RuntimeError("could not create range decoder")

    def read_gaussian(self, count: int, sigma: np.ndarray) -> np.ndarray:
        sigma = np.ascontiguousarray(sigma, np.float32)
        if sigma.size != count:
            raise ValueError("sigma length must equal count")
        out = np.empty(count, dtype=np.int32)
        _check(self._rl.lib.rc_decoder_read_gaussian(
            self._handle, count, _f32ptr(sigma), _i32ptr(out)), "read_gaussian")
        return out

    def read_indexed(self, count: int, pmf: np.ndarray, indexes: np.ndarray,
                     lo: int) -> np.ndarray:
        indexes = np.ascontiguousarray(indexes, np.int32)
        if indexes.size != count:
            raise ValueError("indexes length must equal count")
        cdf = np.ascontiguousarray(quantize_pmf_to_cdf(pmf))
        out = np.empty(count, dtype=np.int32)
        _check(self._rl.lib.rc_decoder_read_indexed(
            self._handle, count, _u32ptr(cdf), cdf.shape[0], cdf.shape[1],
            _i32ptr(indexes), _i32ptr(out), lo), "read_indexed")
        return out

    def close(self) -> None:
        if self._handle:
            self._rl.lib.rc_decoder_free(self._handle)
            self._handle = None


def make_encoder(coder_id: int):
    if coder_id == BYPASS_ID:
        return BypassStreamEncoder()
    if coder_id == RANGE_ID:
        return RangeStreamEncoder()
    raise ValueError(f"unknown coder id {coder_id}")


def make_decoder(coder_id: int, data: bytes):
    if coder_id == BYPASS_ID:
        return BypassStreamDecoder(data)
    if coder_id == RANGE_ID:
        return RangeStreamDecoder(data)
    raise ValueError(f"unknown coder id {coder_id}")


def coder_available(coder_id: int) -> bool:
    if coder_id == BYPASS_ID:
        return True
    if coder_id == RANGE_ID:
        return RangeLibrary.available()
    return False


# -- one-shot native interface ------------------------------------------------


def rc_encode_array(symbols: np.ndarray, mu: np.ndarray, sigma: np.ndarray) -> bytes:
    """One-call native encode of a Gaussian-modelled symbol array."""
    rl = RangeLibrary.load()
    symbols = np.ascontiguousarray(symbols, np.int32)
    mu = np.ascontiguousarray(mu, np.float32)
    sigma = np.ascontiguousarray(sigma, np.float32)
    n = symbols.size
    cap = 12 * n + 64
    out = np.empty(cap, dtype=np.uint8)
    written = ctypes.c_size_t()
    status = rl.lib.rc_encode(
        _i32ptr(symbols), n, _f32ptr(mu), _f32ptr(sigma),
        out.ctypes.data_as(ctypes.POINTER(ctypes.c_uint8)), cap,
        ctypes.byref(written))
    _check(status, "encode")
    return out[: written.value].tobytes()


def rc_decode_array(data: bytes, count: int, mu: np.ndarray,
                    sigma: np.ndarray) -> np.ndarray:
    """One-call native decode; mirror of :func:`rc_encode_array`."""
    rl = RangeLibrary.load()
    mu = np.ascontiguousarray(mu, np.float32)
    sigma = np.ascontiguousarray(sigma, np.float32)
    buf = (ctypes.c_uint8 * len(data)).from_buffer_copy(data)
    out = np.empty(count, dtype=np.int32)
    status = rl.lib.rc_decode(buf, len(data), count, _f32ptr(mu), _f32ptr(sigma),
                              _i32ptr(out))
    _check(status, "decode")
    return out

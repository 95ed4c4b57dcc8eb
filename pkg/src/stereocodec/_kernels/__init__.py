"""Serializer kernels.

The compiled Cython implementation is preferred; the pure Python reference
is the fallback.  Selection happens once at import time.  Set the
environment variable ``STEREOCODEC_PURE_PY=1`` to force the fallback.
"""

import os


def load_backend(name: str):
    """Import a specific backend module: ``"cython"`` or ``"pure"``."""
    if name == "cython":
        from stereocodec._kernels import _bitio
        return _bitio
    if name == "pure":
        from stereocodec._kernels import _bitio_py
        return _bitio_py
    raise ValueError(f"unknown kernel backend: {name!r}")


if os.environ.get("STEREOCODEC_PURE_PY", "") not in ("", "0"):
    BACKEND = "pure"
    _impl = load_backend("pure")
else:
    try:
        _impl = load_backend("cython")
        BACKEND = "cython"
    except ImportError:
        _impl = load_backend("pure")
        BACKEND = "pure"

encode_signed = _impl.encode_signed
decode_signed = _impl.decode_signed

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Exp-Golomb bit serialization, Cython implementation.

Byte-identical to the pure Python reference in ``_bitio_py.py``; see that
module for the format description.
"""

import numpy as np

cdef long long _MAX_MAG = (<long long>1) << 30


def encode_signed(values) -> bytes:
    """Encode an int32 array as byte-aligned signed Exp-Golomb codes."""
    cdef const int[::1] vals = np.ascontiguousarray(values, dtype=np.int32)
    cdef Py_ssize_t n = vals.shape[0]
    cdef bytearray out = bytearray()
    cdef unsigned long long acc = 0
    cdef int acc_bits = 0
    cdef Py_ssize_t i
    cdef long long v
    cdef unsigned long long u, code, tmp
    cdef int nbits
    for i in range(n):
        v = vals[i]
        if v > _MAX_MAG or v < -_MAX_MAG:
            raise ValueError(f"magnitude too large for serializer: {v}")
        u = <unsigned long long>((v << 1) ^ (v >> 63))
        code = u + 1
        nbits = 0
        tmp = code
        while tmp:
            nbits += 1
            tmp >>= 1
        # (nbits - 1) zero bits, then the code itself in nbits bits.
        acc <<= nbits - 1
        acc_bits += nbits - 1
        while acc_bits >= 8:
            acc_bits -= 8
            out.append(<unsigned char>((acc >> acc_bits) & 0xFF))
        acc &= ((<unsigned long long>1) << acc_bits) - 1
        acc = (acc << nbits) | code
        acc_bits += nbits
        while acc_bits >= 8:
            acc_bits -= 8
            out.append(<unsigned char>((acc >> acc_bits) & 0xFF))
        acc &= ((<unsigned long long>1) << acc_bits) - 1
    if acc_bits:
        out.append(<unsigned char>((acc << (8 - acc_bits)) & 0xFF))
    return bytes(out)


def decode_signed(buf, offset, count):
    """Decode ``count`` values from ``buf`` starting at byte ``offset``.

    Returns ``(values, end_offset)``.  Raises ``ValueError`` on a truncated
    or corrupt stream.
    """
    cdef const unsigned char[::1] data = buf
    out_arr = np.empty(count, dtype=np.int32)
    cdef int[::1] out = out_arr
    cdef Py_ssize_t total = data.shape[0]
    cdef Py_ssize_t pos = offset
    cdef Py_ssize_t i, j, n = count
    cdef unsigned int window = 0
    cdef int window_bits = 0
    cdef int zeros, bit
    cdef unsigned long long code, u
    for i in range(n):
        zeros = 0
        while True:
            if window_bits == 0:
                if pos >= total:
                    raise ValueError("truncated Exp-Golomb stream")
                window = data[pos]
                pos += 1
                window_bits = 8
            window_bits -= 1
            bit = (window >> window_bits) & 1
            if bit:
                break
            zeros += 1
            if zeros > 62:
                raise ValueError("corrupt Exp-Golomb stream")
        code = 1
        for j in range(zeros):
            if window_bits == 0:
                if pos >= total:
                    raise ValueError("truncated Exp-Golomb stream")
                window = data[pos]
                pos += 1
                window_bits = 8
            window_bits -= 1
            code = (code << 1) | ((window >> window_bits) & 1)
        u = code - 1
        out[i] = <int>((u >> 1) ^ (-(<long long>(u & 1))))
    return out_arr, pos

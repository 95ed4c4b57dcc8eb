"""Exp-Golomb bit serialization, pure Python implementation.

Reference implementation of the serializer kernel.  The Cython twin in
``_bitio.pyx`` must produce byte-identical output; the test suite checks the
two against each other.

Encoding: signed values are zigzag mapped to unsigned codes
(0, -1, 1, -2, 2, ... -> 0, 1, 2, 3, 4, ...) and written as order-0
Exp-Golomb codewords, MSB first.  Every encoded array is padded with zero
bits to a whole byte so that arrays can be concatenated byte-aligned and
decoded independently.
"""

import numpy as np

_MAX_MAG = 1 << 30


def encode_signed(values) -> bytes:
    """Encode an int32 array as byte-aligned signed Exp-Golomb codes."""
    acc = 0
    acc_bits = 0
    out = bytearray()
    for v in values:
        v = int(v)
        if v > _MAX_MAG or v < -_MAX_MAG:
            raise ValueError(f"magnitude too large for serializer: {v}")
        u = (v << 1) ^ (v >> 63) if v < 0 else (v << 1)
        code = u + 1
        nbits = code.bit_length()
        # (nbits - 1) zero bits, then the code itself in nbits bits.
        acc = (acc << (2 * nbits - 1)) | code
        acc_bits += 2 * nbits - 1
        while acc_bits >= 8:
            acc_bits -= 8
            out.append((acc >> acc_bits) & 0xFF)
        acc &= (1 << acc_bits) - 1
    if acc_bits:
        out.append((acc << (8 - acc_bits)) & 0xFF)
    return bytes(out)


def decode_signed(buf, offset: int, count: int):
    """Decode ``count`` values from ``buf`` starting at byte ``offset``.

    Returns ``(values, end_offset)`` where ``end_offset`` is the byte offset
    just past the (byte-aligned) encoded block.  Raises ``ValueError`` on a
    truncated or corrupt stream.
    """
    out = np.empty(count, dtype=np.int32)
    total = len(buf)
    pos = offset
    window = 0
    window_bits = 0
    for i in range(count):
        zeros = 0
        while True:
            if window_bits == 0:
                if pos >= total:
                    raise ValueError("truncated Exp-Golomb stream")
                window = buf[pos]
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
        for _ in range(zeros):
            if window_bits == 0:
                if pos >= total:
                    raise ValueError("truncated Exp-Golomb stream")
                window = buf[pos]
                pos += 1
                window_bits = 8
            window_bits -= 1
            code = (code << 1) | ((window >> window_bits) & 1)
        u = code - 1
        out[i] = (u >> 1) ^ -(u & 1)
    return out, pos

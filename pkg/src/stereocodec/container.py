"""Bitstream container.

Layout (all integers little-endian)::

    magic            4 bytes   b"SVC1"
    version          u16       container format version (currently 1)
    coder_id         u8        symbol stream backend (see stereocodec.coders)
    intra_id         u8        intra codec identifier
    width            u32       original frame width in pixels
    height           u32       original frame height in pixels
    frame_count      u32       frames (stereo pairs) in display order
    gop_size         u16       intra period used by the encoder
    weights_source   u8        0 = seeded default weights, 1 = checkpoint
    reserved         u8        zero
    config_len       u16       length of the config text that follows
    config_text      bytes     CodecConfig in its text format (utf-8)
    weights_digest   u32       crc32 of the model weights
    payload_crc      u32       crc32 over all frame records that follow
    frame records    ...

Each frame record::

    frame_type       u8        0 = intra, 1 = predicted
    segment_count    u8
    segment_length   u32 * segment_count
    segment_bytes    ...

The decoder validates magic, version and the payload checksum before
touching any entropy-coded data; :class:`ContainerError` signals a corrupt
or incompatible file.
"""

import io
import struct
import zlib
from dataclasses import dataclass, field

MAGIC = b"SVC1"
VERSION = 1
FRAME_INTRA = 0
FRAME_PREDICTED = 1

_HEAD = struct.Struct("<4sHBBIIIHBBH")
_TAIL = struct.Struct("<II")


class ContainerError(Exception):
    """Raised for corrupt, truncated, or incompatible containers."""


@dataclass
class ContainerHeader:
    width: int
    height: int
    frame_count: int
    gop_size: int
    coder_id: int
    intra_id: int
    config_text: str
    weights_digest: int = 0
    weights_source: int = 0
    version: int = VERSION


@dataclass
class FrameRecord:
    frame_type: int
    segments: list[bytes] = field(default_factory=list)

    def total_bytes(self) -> int:
        return sum(len(s) for s in self.segments)


def _pack_records(records: list[FrameRecord]) -> bytes:
    out = io.BytesIO()
    for rec in records:
        if not 0 <= len(rec.segments) <= 255:
            raise ValueError("segment count out of range")
        out.write(struct.pack("<BB", rec.frame_type, len(rec.segments)))
        for seg in rec.segments:
            out.write(struct.pack("<I", len(seg)))
        for seg in rec.segments:
            out.write(seg)
    return out.getvalue()


def write_container(path, header: ContainerHeader, records: list[FrameRecord]) -> int:
    """Write a container file; returns its total size in bytes."""
    if len(records) != header.frame_count:
        raise ValueError(f"{len(records)} records for {header.frame_count} frames")
    config_bytes = header.config_text.encode("utf-8")
    payload = _pack_records(records)
    blob = io.BytesIO()
    blob.write(_HEAD.pack(MAGIC, header.version, header.coder_id, header.intra_id,
                          header.width, header.height, header.frame_count,
                          header.gop_size, header.weights_source, 0,
                          len(config_bytes)))
    blob.write(config_bytes)
    blob.write(_TAIL.pack(header.weights_digest & 0xFFFFFFFF,
                          zlib.crc32(payload) & 0xFFFFFFFF))
    blob.write(payload)
    data = blob.getvalue()
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def read_container(path) -> tuple[ContainerHeader, list[FrameRecord]]:
    """Read and validate a container file."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEAD.size:
        raise ContainerError("file too short to be a container")
    (magic, version, coder_id, intra_id, width, height, frame_count,
     gop_size, weights_source, _reserved, config_len) = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise ContainerError("bad magic; not a stereocodec container")
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version}")
    pos = _HEAD.size
    if len(data) < pos + config_len + _TAIL.size:
        raise ContainerError("truncated header")
    config_text = data[pos: pos + config_len].decode("utf-8")
    pos += config_len
    weights_digest, payload_crc = _TAIL.unpack_from(data, pos)
    pos += _TAIL.size
    payload = data[pos:]
    if zlib.crc32(payload) & 0xFFFFFFFF != payload_crc:
        raise ContainerError("payload checksum mismatch")
    header = ContainerHeader(width=width, height=height, frame_count=frame_count,
                             gop_size=gop_size, coder_id=coder_id, intra_id=intra_id,
                             config_text=config_text, weights_digest=weights_digest,
                             weights_source=weights_source, version=version)
    records = []
    view = memoryview(payload)
    offset = 0
    for _ in range(frame_count):
        if offset + 2 > len(payload):
            raise ContainerError("truncated frame record")
        frame_type, n_seg = struct.unpack_from("<BB", view, offset)
        offset += 2
        lengths = []
        for _ in range(n_seg):
            if offset + 4 > len(payload):
                raise ContainerError("truncated segment table")
            (length,) = struct.unpack_from("<I", view, offset)
            lengths.append(length)
            offset += 4
        segments = []
        for length in lengths:
            if offset + length > len(payload):
                raise ContainerError("truncated segment payload")
            segments.append(bytes(view[offset: offset + length]))
            offset += length
        records.append(FrameRecord(frame_type=frame_type, segments=segments))
    if offset != len(payload):
        raise ContainerError("trailing bytes after last frame record")
    return header, records

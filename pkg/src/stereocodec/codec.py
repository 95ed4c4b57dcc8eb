"""Clip-level encoding and decoding.

A clip is a pair of aligned frame sequences (left and right view).  Frames
are grouped into GOPs: the first frame of each group is intra coded, the
rest are predicted from their decoded predecessors by the
:class:`~stereocodec.pipeline.StereoFrameCodec`.

Frames are padded to a multiple of the configured block size by edge
replication before coding and cropped back on output, so arbitrary
resolutions round-trip unchanged.

Determinism: encoding and decoding run under :func:`deterministic_session`,
which pins torch to one thread so that float32 op order (and therefore
every entropy-model parameter) is identical between the encoder and an
independent decoder process.  The encoder feeds its own decoded output
forward, so encoder-side reconstructions equal decoder output bit for bit.
"""

import contextlib
import zlib

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from stereocodec import coders
from stereocodec.config import CodecConfig
from stereocodec.container import (
    FRAME_INTRA,
    FRAME_PREDICTED,
    ContainerError,
    ContainerHeader,
    FrameRecord,
    read_container,
    write_container,
)
from stereocodec.entropy import FactorizedPrior, quantize_hyper
from stereocodec.layers import ResidualBlock, conv3x3, deconv3x3
from stereocodec.pipeline import VIEWS, StereoFrameCodec

INTRA_PASSTHROUGH = 0
INTRA_FACTORIZED = 1
INTRA_NAMES = {INTRA_PASSTHROUGH: "passthrough", INTRA_FACTORIZED: "factorized"}
INTRA_IDS = {name: iid for iid, name in INTRA_NAMES.items()}

DEFAULT_SEED = 0


@contextlib.contextmanager
def deterministic_session():
    """Pin torch to single-threaded evaluation for bit-exact runs."""
    threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        with torch.no_grad():
            yield
    finally:
        torch.set_num_threads(threads)


class PassthroughIntra(nn.Module):
    """8-bit intra codec: quantize each channel to a byte, store raw.

    Costs exactly 24 bits per pixel per view, but is exact to 1/255 and has
    no parameters, which makes it a stable anchor for P-frame training and
    for tests.
    """

    def encode(self, frame: torch.Tensor) -> tuple[torch.Tensor, bytes]:
        q = torch.clamp(torch.round(frame * 255.0), 0.0, 255.0)
        payload = q.to(torch.uint8).numpy().tobytes()
        return q / 255.0, payload

    def decode(self, payload: bytes, shape) -> torch.Tensor:
        b, c, h, w = shape
        expected = b * c * h * w
        if len(payload) != expected:
            raise ContainerError(f"intra payload has {len(payload)} bytes, "
                                 f"expected {expected}")
        q = np.frombuffer(payload, dtype=np.uint8).reshape(b, c, h, w)
        return torch.from_numpy(q.astype(np.float32)) / 255.0


class FactorizedIntra(nn.Module):
    """Small learned intra codec: strided autoencoder + factorized prior."""

    def __init__(self, channels: int = 64):
        super().__init__()
        self.channels = channels
        self.analysis = nn.Sequential(
            conv3x3(3, channels // 2, stride=2), ResidualBlock(channels // 2),
            conv3x3(channels // 2, channels, stride=2), ResidualBlock(channels),
            conv3x3(channels, channels, stride=2),
        )
        self.synthesis = nn.Sequential(
            deconv3x3(channels, channels), ResidualBlock(channels),
            deconv3x3(channels, channels // 2), ResidualBlock(channels // 2),
            deconv3x3(channels // 2, 3),
        )
        self.prior = FactorizedPrior(channels)

    def latent_hw(self, hw) -> tuple[int, int]:
        return -(-hw[0] // 8), -(-hw[1] // 8)

    def forward(self, frame: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Training pass: returns (reconstruction, total bits)."""
        y = self.analysis(frame)
        y_hat = quantize_hyper(y)
        bits = self.prior.bits(y_hat)
        x_hat = self.synthesis(y_hat)[..., : frame.shape[-2], : frame.shape[-1]]
        return x_hat, bits

    def encode(self, frame: torch.Tensor, coder) -> torch.Tensor:
        y_hat = quantize_hyper(self.analysis(frame))
        pmf = self.prior.pmf_table(-64, 64)
        symbols = y_hat.numpy().astype(np.int32).reshape(-1)
        channels = np.broadcast_to(
            np.arange(self.channels, dtype=np.int32)[:, None, None],
            y_hat.shape[-3:]).reshape(-1)
        coder.push_indexed(symbols, pmf, channels, -64)
        x_hat = self.synthesis(y_hat)[..., : frame.shape[-2], : frame.shape[-1]]
        return torch.clamp(x_hat, 0.0, 1.0)

    def decode(self, coder, shape) -> torch.Tensor:
        b, _, h, w = shape
        lh, lw = self.latent_hw((h, w))
        pmf = self.prior.pmf_table(-64, 64)
        count = b * self.channels * lh * lw
        channels = np.broadcast_to(
            np.arange(self.channels, dtype=np.int32)[None, :, None, None],
            (b, self.channels, lh, lw)).reshape(-1)
        symbols = coder.read_indexed(count, pmf, channels, -64)
        y_hat = torch.from_numpy(symbols.astype(np.float32).reshape(b, self.channels, lh, lw))
        x_hat = self.synthesis(y_hat)[..., :h, :w]
        return torch.clamp(x_hat, 0.0, 1.0)


def pad_frame(frame: torch.Tensor, multiple: int) -> torch.Tensor:
    """Replicate-pad bottom/right so H and W are multiples of ``multiple``."""
    h, w = frame.shape[-2:]
    ph = (multiple - h % multiple) % multiple
    pw = (multiple - w % multiple) % multiple
    if ph == 0 and pw == 0:
        return frame
    return F.pad(frame, (0, pw, 0, ph), mode="replicate")


def state_dict_digest(module: nn.Module) -> int:
    """Order-independent crc32 over a module's parameters and buffers."""
    crc = 0
    state = module.state_dict()
    for name in sorted(state):
        crc = zlib.crc32(name.encode("utf-8"), crc)
        crc = zlib.crc32(np.ascontiguousarray(
            state[name].detach().cpu().numpy()).tobytes(), crc)
    return crc & 0xFFFFFFFF


class StereoVideoCodec(nn.Module):
    """Frame codec plus intra codec plus stream backend: the full codec."""

    def __init__(self, config: CodecConfig | None = None,
                 coder_id: int = coders.BYPASS_ID):
        super().__init__()
        self.config = config = config or CodecConfig()
        self.coder_id = coder_id
        self.frame_codec = StereoFrameCodec(config)
        if config.intra_codec not in INTRA_IDS:
            raise ValueError(f"unknown intra codec {config.intra_codec!r}")
        self.intra_id = INTRA_IDS[config.intra_codec]
        self.intra = (PassthroughIntra() if self.intra_id == INTRA_PASSTHROUGH
                      else FactorizedIntra())
        self.weights_source = 0

    # -- construction helpers ------------------------------------------------

    @classmethod
    def seeded(cls, config: CodecConfig | None = None,
               coder_id: int = coders.BYPASS_ID,
               seed: int = DEFAULT_SEED) -> "StereoVideoCodec":
        """Deterministically initialized codec: same config and seed, same
        weights, so encoder and decoder agree without a checkpoint file."""
        torch.manual_seed(seed)
        codec = cls(config, coder_id)
        codec.eval()
        return codec

    def save_checkpoint(self, path) -> None:
        torch.save({
            "format": 1,
            "config_text": self.config.to_text(),
            "state_dict": self.state_dict(),
        }, path)

    @classmethod
    def load_checkpoint(cls, path, coder_id: int = coders.BYPASS_ID) -> "StereoVideoCodec":
        blob = torch.load(path, map_location="cpu", weights_only=True)
        config = CodecConfig.from_text(blob["config_text"])
        codec = cls(config, coder_id)
        codec.load_state_dict(blob["state_dict"])
        codec.weights_source = 1
        codec.eval()
        return codec

    # -- clip coding ----------------------------------------------------------

    def _encode_intra(self, frames: dict) -> tuple[FrameRecord, dict, float]:
        if self.intra_id == INTRA_PASSTHROUGH:
            segments = []
            x_hat = {}
            for view in VIEWS:
                x_hat[view], payload = self.intra.encode(frames[view])
                segments.append(payload)
            bits = float(8 * sum(len(s) for s in segments))
            return FrameRecord(FRAME_INTRA, segments), x_hat, bits
        coder = coders.make_encoder(self.coder_id)
        x_hat = {}
        bits = 0.0
        for view in VIEWS:
            y = self.intra.analysis(frames[view])
            bits += float(self.intra.prior.bits(quantize_hyper(y)))
            x_hat[view] = self.intra.encode(frames[view], coder)
        return FrameRecord(FRAME_INTRA, [coder.finish()]), x_hat, bits

    def _decode_intra(self, record: FrameRecord, shape) -> dict:
        if self.intra_id == INTRA_PASSTHROUGH:
            if len(record.segments) != len(VIEWS):
                raise ContainerError("intra record must hold one segment per view")
            return {view: self.intra.decode(seg, shape)
                    for view, seg in zip(VIEWS, record.segments)}
        if len(record.segments) != 1:
            raise ContainerError("intra record must hold one stream segment")
        coder = coders.make_decoder(self.coder_id, record.segments[0])
        return {view: self.intra.decode(coder, shape) for view in VIEWS}

    def encode_clip(self, clip: dict, gop_size: int | None = None) -> dict:
        """Encode a clip held in memory.

        ``clip`` maps view to a ``[T, 3, H, W]`` float tensor in [0, 1].
        Returns records, per-frame statistics, and the encoder-side (equal
        to decoder-side) reconstructions.
        """
        gop = gop_size or self.config.gop_size
        t_total = clip[VIEWS[0]].shape[0]
        height, width = clip[VIEWS[0]].shape[-2:]
        records = []
        stats = []
        recon = {v: [] for v in VIEWS}
        with deterministic_session():
            buffer = None
            for t in range(t_total):
                frames = {v: pad_frame(clip[v][t: t + 1], self.config.pad_multiple)
                          for v in VIEWS}
                if t % gop == 0:
                    record, x_hat, est_bits = self._encode_intra(frames)
                    buffer = self.frame_codec.init_buffer(x_hat)
                    frame_type = FRAME_INTRA
                else:
                    coder = coders.make_encoder(self.coder_id)
                    out = self.frame_codec.encode_frame(frames, buffer, coder)
                    record = FrameRecord(FRAME_PREDICTED, [coder.finish()])
                    buffer = out["buffer"]
                    x_hat = out["x_hat"]
                    est_bits = float(sum(
                        float(b) for group in out["bits"].values()
                        for stream in group.values() for b in stream.values()))
                    frame_type = FRAME_PREDICTED
                records.append(record)
                stats.append({
                    "frame": t,
                    "type": frame_type,
                    "estimated_bits": est_bits,
                    "actual_bits": 8.0 * record.total_bytes(),
                })
                for v in VIEWS:
                    recon[v].append(x_hat[v][..., :height, :width])
        return {
            "records": records,
            "stats": stats,
            "recon": {v: torch.cat(recon[v], dim=0) for v in VIEWS},
        }

    def encode_file(self, clip: dict, path, gop_size: int | None = None) -> dict:
        result = self.encode_clip(clip, gop_size)
        height, width = clip[VIEWS[0]].shape[-2:]
        header = ContainerHeader(
            width=width, height=height,
            frame_count=clip[VIEWS[0]].shape[0],
            gop_size=gop_size or self.config.gop_size,
            coder_id=self.coder_id, intra_id=self.intra_id,
            config_text=self.config.to_text(),
            weights_digest=state_dict_digest(self),
            weights_source=self.weights_source,
        )
        result["container_bytes"] = write_container(path, header, result["records"])
        return result

    def decode_records(self, header: ContainerHeader,
                       records: list[FrameRecord]) -> dict:
        """Decode frame records into ``{view: [T, 3, H, W]}`` tensors."""
        pad_h = -(-header.height // self.config.pad_multiple) * self.config.pad_multiple
        pad_w = -(-header.width // self.config.pad_multiple) * self.config.pad_multiple
        shape = (1, 3, pad_h, pad_w)
        out = {v: [] for v in VIEWS}
        with deterministic_session():
            buffer = None
            for t, record in enumerate(records):
                expected = FRAME_INTRA if t % header.gop_size == 0 else FRAME_PREDICTED
                if record.frame_type != expected:
                    raise ContainerError(f"frame {t}: unexpected frame type "
                                         f"{record.frame_type}")
                if record.frame_type == FRAME_INTRA:
                    x_hat = self._decode_intra(record, shape)
                    buffer = self.frame_codec.init_buffer(x_hat)
                else:
                    if len(record.segments) != 1:
                        raise ContainerError("predicted record must hold one segment")
                    coder = coders.make_decoder(self.coder_id, record.segments[0])
                    decoded = self.frame_codec.decode_frame(coder, buffer,
                                                            (pad_h, pad_w))
                    x_hat = decoded["x_hat"]
                    buffer = decoded["buffer"]
                for v in VIEWS:
                    out[v].append(x_hat[v][..., : header.height, : header.width])
        return {v: torch.cat(out[v], dim=0) for v in VIEWS}

    def decode_file(self, path) -> dict:
        header, records = read_container(path)
        self.check_compatible(header)
        return self.decode_records(header, records)

    def check_compatible(self, header: ContainerHeader) -> None:
        if header.config_text != self.config.to_text():
            raise ContainerError("container was produced with a different "
                                 "codec configuration")
        if header.coder_id != self.coder_id:
            raise ContainerError(
                f"container uses coder {coders.CODER_NAMES.get(header.coder_id)}, "
                f"decoder is set to {coders.CODER_NAMES.get(self.coder_id)}")
        if header.weights_digest != state_dict_digest(self):
            raise ContainerError("container was produced with different model "
                                 "weights; load the matching checkpoint")

"""Stereo frame coding pipeline.

One P-frame step runs five stages per view pair, mirroring a conditional
low-delay video codec:

1. motion estimation: dense flow from each view's previous reconstruction
   to its current frame;
2. motion compression: the flow pair goes through a joint analysis
   transform, the interleaved entropy model, and a synthesis transform;
3. temporal context mining: the previous decoded features are warped by the
   decoded flow into a three-scale context pyramid;
4. conditional frame compression: the frame pair is analysed conditioned on
   the context pyramid, coded, and synthesized back into feature maps;
5. frame reconstruction from those features.

Cross-view enhancement blocks sit inside both analysis and synthesis
transforms at strides 4 and 8, and both entropy models use cross-view
priors, so the two views are coded jointly throughout.

Encoding and decoding share every parameter-estimation and synthesis code
path; an encoder followed by a decoder over the written symbols reproduces
the encoder-side reconstructions exactly (same floating point operations in
the same order).
"""

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

from stereocodec.config import CodecConfig
from stereocodec.disparity import LEFT, RIGHT
from stereocodec.enhance import CrossViewEnhancer
from stereocodec.entropy import EncodedLatents, InterleavedEntropyModel
from stereocodec.layers import ResidualBlock, conv3x3, deconv3x3
from stereocodec.motion import PyramidFlowEstimator, TemporalContextMiner

VIEWS = (LEFT, RIGHT)


def _crop(x: torch.Tensor, hw: tuple[int, int]) -> torch.Tensor:
    return x[..., : hw[0], : hw[1]]


def _scale_hw(hw: tuple[int, int], stride: int) -> tuple[int, int]:
    return math.ceil(hw[0] / stride), math.ceil(hw[1] / stride)


class PairAnalysis(nn.Module):
    """Four-stage strided analysis transform over a view pair.

    Per-view convolutions share weights across views; optional cross-view
    enhancers couple the views at strides 4 and 8.  When ``cond_channels``
    is set, a context pyramid level is concatenated at each of the first
    three stages.
    """

    def __init__(self, in_channels: int, stage_channels: tuple[int, int, int],
                 latent_channels: int, config: CodecConfig,
                 cond_channels: int | None = None):
        super().__init__()
        c1, c2, c3 = stage_channels
        cond = cond_channels or 0
        self.conditioned = cond_channels is not None
        self.stage1 = nn.Sequential(conv3x3(in_channels + cond, c1, stride=2),
                                    ResidualBlock(c1))
        self.stage2 = nn.Sequential(conv3x3(c1 + cond, c2, stride=2),
                                    ResidualBlock(c2))
        self.stage3 = nn.Sequential(conv3x3(c2 + cond, c3, stride=2),
                                    ResidualBlock(c3))
        self.stage4 = conv3x3(c3, latent_channels, stride=2)
        self.enhancers = nn.ModuleDict({
            "s4": CrossViewEnhancer(c2, config.enhancer_shift_planes(4),
                                    config.enhancer_downsample),
            "s8": CrossViewEnhancer(c3, config.enhancer_shift_planes(8),
                                    config.enhancer_downsample),
        })

    def _with_cond(self, x: torch.Tensor, ctx, level: int) -> torch.Tensor:
        if not self.conditioned:
            return x
        c = _crop(ctx[level], x.shape[-2:])
        return torch.cat([x, c], dim=1)

    def forward(self, x: dict, ctx: dict | None = None, fer_enabled: bool = True,
                mode: str | None = None) -> dict:
        h = {v: self.stage1(self._with_cond(x[v], ctx and ctx[v], 0)) for v in VIEWS}
        h = {v: self.stage2(self._with_cond(h[v], ctx and ctx[v], 1)) for v in VIEWS}
        if fer_enabled:
            h[LEFT], h[RIGHT] = self.enhancers["s4"](h[LEFT], h[RIGHT], mode)
        h = {v: self.stage3(self._with_cond(h[v], ctx and ctx[v], 2)) for v in VIEWS}
        if fer_enabled:
            h[LEFT], h[RIGHT] = self.enhancers["s8"](h[LEFT], h[RIGHT], mode)
        return {v: self.stage4(h[v]) for v in VIEWS}


class PairSynthesis(nn.Module):
    """Mirror of :class:`PairAnalysis`: latents back to per-view maps."""

    def __init__(self, latent_channels: int, stage_channels: tuple[int, int, int],
                 out_channels: int, config: CodecConfig,
                 cond_channels: int | None = None):
        super().__init__()
        c1, c2, c3 = stage_channels
        cond = cond_channels or 0
        self.conditioned = cond_channels is not None
        self.up1 = nn.Sequential(deconv3x3(latent_channels, c3), ResidualBlock(c3))
        self.up2 = deconv3x3(c3, c2)
        self.fuse2 = nn.Sequential(conv3x3(c2 + cond, c2), ResidualBlock(c2))
        self.up3 = deconv3x3(c2, c1)
        self.fuse3 = nn.Sequential(conv3x3(c1 + cond, c1), ResidualBlock(c1))
        self.up4 = deconv3x3(c1, out_channels)
        self.fuse4 = conv3x3(out_channels + cond, out_channels)
        self.enhancers = nn.ModuleDict({
            "s8": CrossViewEnhancer(c3, config.enhancer_shift_planes(8),
                                    config.enhancer_downsample),
            "s4": CrossViewEnhancer(c2, config.enhancer_shift_planes(4),
                                    config.enhancer_downsample),
        })

    def _fused(self, fuse: nn.Module, x: torch.Tensor, ctx, level: int) -> torch.Tensor:
        if self.conditioned:
            x = torch.cat([x, _crop(ctx[level], x.shape[-2:])], dim=1)
        return fuse(x)

    def forward(self, y_hat: dict, frame_hw: tuple[int, int], ctx: dict | None = None,
                fer_enabled: bool = True, mode: str | None = None) -> dict:
        s8, s4, s2, s1 = (_scale_hw(frame_hw, s) for s in (8, 4, 2, 1))
        h = {v: _crop(self.up1(y_hat[v]), s8) for v in VIEWS}
        if fer_enabled:
            h[LEFT], h[RIGHT] = self.enhancers["s8"](h[LEFT], h[RIGHT], mode)
        h = {v: self._fused(self.fuse2, _crop(self.up2(h[v]), s4), ctx and ctx[v], 2)
             for v in VIEWS}
        if fer_enabled:
            h[LEFT], h[RIGHT] = self.enhancers["s4"](h[LEFT], h[RIGHT], mode)
        h = {v: self._fused(self.fuse3, _crop(self.up3(h[v]), s2), ctx and ctx[v], 1)
             for v in VIEWS}
        return {v: self._fused(self.fuse4, _crop(self.up4(h[v]), s1), ctx and ctx[v], 0)
                for v in VIEWS}


class FrameReconstructor(nn.Module):
    """Decoded features to an RGB frame."""

    def __init__(self, feature_channels: int):
        super().__init__()
        self.net = nn.Sequential(
            ResidualBlock(feature_channels),
            ResidualBlock(feature_channels),
            conv3x3(feature_channels, 3),
        )

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return self.net(features)


class FrameFeatureExtractor(nn.Module):
    """RGB frame to the feature space used by the temporal buffer."""

    def __init__(self, feature_channels: int):
        super().__init__()
        self.net = nn.Sequential(conv3x3(3, feature_channels),
                                 ResidualBlock(feature_channels))

    def forward(self, frame: torch.Tensor) -> torch.Tensor:
        return self.net(frame)


def total_bits(bits: dict) -> torch.Tensor:
    """Sum a nested bits dictionary into one scalar tensor."""
    total = None
    for value in bits.values():
        part = total_bits(value) if isinstance(value, dict) else value
        total = part if total is None else total + part
    if total is None:
        raise ValueError("empty bits dictionary")
    return total


class StereoFrameCodec(nn.Module):
    """All five coding stages for stereo P-frames.

    Runtime switches:

    * ``fer_enabled``: apply the cross-view enhancement blocks;
    * ``cross_view_enabled`` (property): let the entropy models use
      cross-view priors;
    * ``ablation_mode``: ``None``, ``"no_attention"`` or ``"no_shift"``,
      forwarded to every matching module.
    """

    def __init__(self, config: CodecConfig | None = None):
        super().__init__()
        self.config = config = config or CodecConfig()
        self.fer_enabled = True
        self.ablation_mode: str | None = None

        self.flow = PyramidFlowEstimator(config.flow_levels, config.flow_hidden)
        self.motion_analysis = PairAnalysis(2, config.motion_enc_channels,
                                            config.motion_latent_channels, config)
        self.motion_synthesis = PairSynthesis(config.motion_latent_channels,
                                              config.motion_enc_channels, 2, config)
        self.motion_entropy = InterleavedEntropyModel(
            config.motion_latent_channels, config.num_slices,
            config.motion_hyper_channels, config.phi_channels,
            config.align_channels, config.latent_shift_planes,
            context_channels=None, sigma_min=config.sigma_min)

        self.context_miner = TemporalContextMiner(config.feature_channels,
                                                  config.context_channels)
        self.context_analysis = PairAnalysis(3, config.enc_channels,
                                             config.latent_channels, config,
                                             cond_channels=config.context_channels)
        self.context_synthesis = PairSynthesis(config.latent_channels,
                                               config.enc_channels,
                                               config.feature_channels, config,
                                               cond_channels=config.context_channels)
        self.context_entropy = InterleavedEntropyModel(
            config.latent_channels, config.num_slices,
            config.hyper_channels, config.phi_channels,
            config.align_channels, config.latent_shift_planes,
            context_channels=config.context_channels, sigma_min=config.sigma_min)

        self.reconstructor = FrameReconstructor(config.feature_channels)
        self.feature_extractor = FrameFeatureExtractor(config.feature_channels)

    @property
    def cross_view_enabled(self) -> bool:
        return self.motion_entropy.cross_view_enabled

    @cross_view_enabled.setter
    def cross_view_enabled(self, value: bool) -> None:
        self.motion_entropy.cross_view_enabled = value
        self.context_entropy.cross_view_enabled = value

    def init_buffer(self, x_hat: dict) -> dict:
        """Temporal buffer entry from an intra-coded frame pair."""
        return {v: {"frame": x_hat[v], "feat": self.feature_extractor(x_hat[v])}
                for v in VIEWS}

    def _motion_to_context(self, flows_hat: dict, buffer: dict) -> dict:
        return {v: self.context_miner(buffer[v]["feat"], flows_hat[v]) for v in VIEWS}

    # -- training -----------------------------------------------------------

    def forward(self, frames: dict, buffer: dict) -> dict:
        """Differentiable P-frame pass; returns reconstructions and bits."""
        hw = frames[LEFT].shape[-2:]
        mode = self.ablation_mode
        flows = {v: self.flow(frames[v], buffer[v]["frame"]) for v in VIEWS}
        mv_latents = self.motion_analysis(flows, None, self.fer_enabled, mode)
        mv_coded = self.motion_entropy(mv_latents, None, mode)
        flows_hat = self.motion_synthesis(mv_coded.y_hat, hw, None,
                                          self.fer_enabled, mode)
        ctx = self._motion_to_context(flows_hat, buffer)
        latents = self.context_analysis(frames, ctx, self.fer_enabled, mode)
        coded = self.context_entropy(latents, ctx, mode)
        features = self.context_synthesis(coded.y_hat, hw, ctx,
                                          self.fer_enabled, mode)
        x_raw = {v: self.reconstructor(features[v]) for v in VIEWS}
        return {
            "x_hat_raw": x_raw,
            "x_hat": {v: torch.clamp(x_raw[v], 0.0, 1.0) for v in VIEWS},
            "features": features,
            "flows": flows_hat,
            "bits": {"motion": mv_coded.bits, "context": coded.bits},
        }

    # -- bitstream paths ----------------------------------------------------

    @torch.no_grad()
    def encode_frame(self, frames: dict, buffer: dict, coder) -> dict:
        """Code one P-frame pair into ``coder``; returns decoder-identical
        reconstructions, the next buffer entry, and estimated bits."""
        hw = frames[LEFT].shape[-2:]
        mode = self.ablation_mode
        flows = {v: self.flow(frames[v], buffer[v]["frame"]) for v in VIEWS}
        mv_latents = self.motion_analysis(flows, None, self.fer_enabled, mode)
        mv_coded = self.motion_entropy.encode(mv_latents, coder, None, mode)
        flows_hat = self.motion_synthesis(mv_coded.y_hat, hw, None,
                                          self.fer_enabled, mode)
        ctx = self._motion_to_context(flows_hat, buffer)
        latents = self.context_analysis(frames, ctx, self.fer_enabled, mode)
        coded = self.context_entropy.encode(latents, coder, ctx, mode)
        features = self.context_synthesis(coded.y_hat, hw, ctx,
                                          self.fer_enabled, mode)
        x_hat = {v: torch.clamp(self.reconstructor(features[v]), 0.0, 1.0)
                 for v in VIEWS}
        return {
            "x_hat": x_hat,
            "buffer": {v: {"frame": x_hat[v], "feat": features[v]} for v in VIEWS},
            "bits": {"motion": mv_coded.bits, "context": coded.bits},
            "y_hat": {"motion": mv_coded.y_hat, "context": coded.y_hat},
        }

    @torch.no_grad()
    def decode_frame(self, coder, buffer: dict, frame_hw: tuple[int, int]) -> dict:
        """Decode one P-frame pair from ``coder``; mirror of
        :meth:`encode_frame`."""
        mode = self.ablation_mode
        latent_hw = _scale_hw(frame_hw, 16)
        mv_y_hat = self.motion_entropy.decode(coder, latent_hw, None, mode)
        flows_hat = self.motion_synthesis(mv_y_hat, frame_hw, None,
                                          self.fer_enabled, mode)
        ctx = self._motion_to_context(flows_hat, buffer)
        y_hat = self.context_entropy.decode(coder, latent_hw, ctx, mode)
        features = self.context_synthesis(y_hat, frame_hw, ctx,
                                          self.fer_enabled, mode)
        x_hat = {v: torch.clamp(self.reconstructor(features[v]), 0.0, 1.0)
                 for v in VIEWS}
        return {
            "x_hat": x_hat,
            "buffer": {v: {"frame": x_hat[v], "feat": features[v]} for v in VIEWS},
            "y_hat": {"motion": mv_y_hat, "context": y_hat},
        }

"""Codec configuration.

A :class:`CodecConfig` pins every structural hyperparameter of the model, so
that an encoder and a decoder built from equal configs (and equal weights)
are guaranteed to agree.  Configs round-trip through a plain ``key = value``
text format; see :meth:`CodecConfig.to_text`.
"""

import math
from dataclasses import dataclass, fields


@dataclass
class CodecConfig:
    # geometry
    pad_multiple: int = 64
    feature_channels: int = 48
    context_channels: int = 48
    # conditional frame codec
    latent_channels: int = 96
    enc_channels: tuple[int, int, int] = (32, 48, 64)
    # motion codec
    motion_latent_channels: int = 64
    motion_enc_channels: tuple[int, int, int] = (16, 24, 32)
    motion_hyper_channels: int = 32
    # entropy model
    num_slices: int = 4
    hyper_channels: int = 48
    phi_channels: int = 64
    align_channels: int = 16
    latent_shift_planes: int = 12
    sigma_min: float = 0.11
    # cross-view enhancement
    max_disparity: int = 192
    enhancer_downsample: int = 2
    # motion estimation
    flow_levels: int = 3
    flow_hidden: int = 32
    # group-of-pictures structure
    gop_size: int = 32
    intra_codec: str = "passthrough"

    def __post_init__(self):
        if isinstance(self.enc_channels, list):
            self.enc_channels = tuple(self.enc_channels)
        if isinstance(self.motion_enc_channels, list):
            self.motion_enc_channels = tuple(self.motion_enc_channels)
        for name in ("latent_channels", "motion_latent_channels", "phi_channels"):
            if getattr(self, name) % self.num_slices != 0:
                raise ValueError(f"{name} must be divisible by num_slices")

    def enhancer_shift_planes(self, stride: int) -> int:
        """Shift planes for an enhancer working on stride-``stride`` features.

        The enhancer halves resolution internally and each shift plane spans
        two columns of relative displacement, so a full-resolution disparity
        budget of ``max_disparity`` needs
        ``max_disparity / (stride * downsample * 2)`` planes, rounded up.
        """
        denom = stride * self.enhancer_downsample * 2
        return max(1, math.ceil(self.max_disparity / denom))

    @classmethod
    def tiny(cls) -> "CodecConfig":
        """Small configuration for fast experiments and the test suite."""
        return cls(
            feature_channels=24,
            context_channels=24,
            latent_channels=32,
            enc_channels=(16, 24, 32),
            motion_latent_channels=16,
            motion_enc_channels=(12, 16, 24),
            motion_hyper_channels=8,
            hyper_channels=16,
            phi_channels=16,
            align_channels=8,
            latent_shift_planes=2,
            max_disparity=32,
            flow_hidden=16,
            gop_size=8,
        )

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CodecConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ValueError(f"line {lineno}: unknown config key {key!r}")
            kwargs[key] = _parse_value(value, getattr(cls(), key))
        return cls(**kwargs)

    def to_file(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    @classmethod
    def from_file(cls, path) -> "CodecConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())


def _parse_value(text: str, template):
    if isinstance(template, tuple):
        return tuple(int(v.strip()) for v in text.split(","))
    if isinstance(template, bool):
        return text.lower() in ("1", "true", "yes")
    if isinstance(template, int):
        return int(text)
    if isinstance(template, float):
        return float(text)
    return text

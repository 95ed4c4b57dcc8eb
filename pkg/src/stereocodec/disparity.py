"""Cross-view matching primitives for rectified stereo features.

In a rectified stereo pair, corresponding points sit on the same scanline:
content visible at column ``w`` in the left view appears at column ``w - d``
in the right view for some nonnegative disparity ``d``.  The primitives here
exploit that structure:

* :func:`build_shift_volume` stacks horizontally shifted copies of a feature
  map, one plane per candidate shift.  Shifting the left view one way and the
  right view the other way makes plane ``d`` of both volumes line up for
  content whose disparity equals the *sum* of the two shifts.
* :func:`similarity_map` scores the per-element agreement of two volumes.
* :func:`normalize_score` squashes raw scores into smooth (0, 1) attention
  weights.
* :class:`VolumeAggregator` collapses an attention-weighted volume back to a
  single feature map with a small 3-D convolution over (shift, height,
  width).

All primitives are differentiable and shape-polymorphic over an optional
leading batch dimension: ``[C, H, W]`` or ``[B, C, H, W]`` features,
``[D, C, H, W]`` or ``[B, D, C, H, W]`` volumes.
"""

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

LEFT = "L"
RIGHT = "R"
SHIFT_PLUS = "plus"
SHIFT_MINUS = "minus"


@dataclass
class FeatureMap:
    """A feature tensor tagged with the view it came from and its stride."""

    data: torch.Tensor
    view: str
    stride: int = 1

    def __post_init__(self):
        if self.view not in (LEFT, RIGHT):
            raise ValueError(f"view must be {LEFT!r} or {RIGHT!r}, got {self.view!r}")


def shift_sign_for_view(view: str) -> str:
    """Shift direction that moves a view's content toward the other view.

    Left-view content sits at larger column indices than its right-view
    counterpart, so the left view shifts ``plus`` (sampling from larger
    columns) and the right view shifts ``minus``.
    """
    if view == LEFT:
        return SHIFT_PLUS
    if view == RIGHT:
        return SHIFT_MINUS
    raise ValueError(f"unknown view: {view!r}")


def build_shift_volume(features: torch.Tensor, shift_sign: str, max_shift: int) -> torch.Tensor:
    """Stack ``max_shift`` horizontally shifted copies of a feature map.

    Plane ``d`` (0-based) holds the features shifted by ``d + 1`` columns:

    * ``plus``:  ``V[d, c, h, w] = features[c, h, w + d + 1]``
    * ``minus``: ``V[d, c, h, w] = features[c, h, w - d - 1]``

    Out-of-range samples are zero.  A plane whose shift magnitude reaches the
    feature width is therefore all zeros.

    Args:
        features: ``[C, H, W]`` or ``[B, C, H, W]`` tensor.
        shift_sign: ``"plus"`` or ``"minus"``.
        max_shift: number of planes ``D`` (shift magnitudes ``1 .. D``).

    Returns:
        ``[D, C, H, W]`` or ``[B, D, C, H, W]`` tensor.
    """
    if shift_sign not in (SHIFT_PLUS, SHIFT_MINUS):
        raise ValueError(f"shift_sign must be 'plus' or 'minus', got {shift_sign!r}")
    if max_shift < 1:
        raise ValueError(f"max_shift must be >= 1, got {max_shift}")
    width = features.shape[-1]
    planes = []
    for d in range(1, max_shift + 1):
        if d >= width:
            planes.append(torch.zeros_like(features))
        elif shift_sign == SHIFT_PLUS:
            planes.append(F.pad(features[..., d:], (0, d)))
        else:
            planes.append(F.pad(features[..., : width - d], (d, 0)))
    return torch.stack(planes, dim=-4)


def identity_volume(features: torch.Tensor) -> torch.Tensor:
    """Single-plane volume with zero shift, used by shift-ablated modes."""
    return features.unsqueeze(-4)


def similarity_map(volume_a: torch.Tensor, volume_b: torch.Tensor) -> torch.Tensor:
    """Elementwise product of two aligned shift volumes.

    Keeps the full ``[D, C, H, W]`` resolution: each element scores how well
    one channel of one view at one candidate shift agrees with the other
    view, with no pooling over channels or space.
    """
    if volume_a.shape != volume_b.shape:
        raise ValueError(f"volume shapes differ: {tuple(volume_a.shape)} vs {tuple(volume_b.shape)}")
    return volume_a * volume_b


def normalize_score(scores: torch.Tensor) -> torch.Tensor:
    """Map raw similarity scores into the open interval (0, 1).

    Computes ``tanh(softplus(x))``: smooth, monotone, and bounded, so the
    downstream aggregation sees well-scaled attention weights regardless of
    the dynamic range of the raw scores.  Zero maps to
    ``tanh(ln 2) = 0.6`` exactly.
    """
    return torch.tanh(F.softplus(scores))


class VolumeAggregator(nn.Module):
    """Collapse an attention-weighted shift volume to a feature map.

    A 3x3x3 convolution over (shift, height, width) mixes neighbouring
    shift planes and pixels, then the shift axis is reduced by summation.
    """

    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv3d(channels, channels, kernel_size=3, padding=1)

    def forward(self, volume: torch.Tensor) -> torch.Tensor:
        batched = volume.dim() == 5
        if not batched:
            volume = volume.unsqueeze(0)
        # Conv3d wants [B, C, D, H, W]; volumes carry [B, D, C, H, W].
        mixed = self.conv(volume.transpose(1, 2))
        out = mixed.sum(dim=2)
        return out if batched else out.squeeze(0)


def aggregate(score_volume: torch.Tensor, feature_volume: torch.Tensor,
              aggregator: VolumeAggregator) -> torch.Tensor:
    """Weight a feature volume by attention scores and collapse it."""
    if score_volume.shape != feature_volume.shape:
        raise ValueError(
            f"score/feature shapes differ: {tuple(score_volume.shape)} vs "
            f"{tuple(feature_volume.shape)}")
    return aggregator(score_volume * feature_volume)


def match_views(left: torch.Tensor, right: torch.Tensor, max_shift: int,
                mode: str | None = None) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Build both shift volumes and the normalized attention scores.

    The shared core of cross-view enhancement and cross-view prior
    alignment.  Returns ``(score, volume_left, volume_right)``.

    ``mode`` selects an ablated variant:

    * ``None``: full behaviour.
    * ``"no_attention"``: scores are replaced by all-ones; the shift volumes
      are kept.
    * ``"no_shift"``: single zero-shift plane; attention reduces to a plain
      per-element gate between unshifted views.
    """
    if mode == "no_shift":
        volume_left = identity_volume(left)
        volume_right = identity_volume(right)
    else:
        volume_left = build_shift_volume(left, SHIFT_PLUS, max_shift)
        volume_right = build_shift_volume(right, SHIFT_MINUS, max_shift)
    if mode == "no_attention":
        score = torch.ones_like(volume_left)
    else:
        score = normalize_score(similarity_map(volume_left, volume_right))
    return score, volume_left, volume_right

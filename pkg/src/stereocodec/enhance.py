"""Cross-view feature enhancement.

A :class:`CrossViewEnhancer` lets each view's feature map borrow information
from the other view.  Both maps are downsampled by a shared strided
convolution, matched with shift volumes and a single shared attention score
(see :mod:`stereocodec.disparity`), and each view aggregates the *other*
view's attention-weighted volume.  The aggregated map is refined at low
resolution, upsampled, and added to the original features as a residual.

Because the attention score is the product of both volumes it is shared
between the two aggregation paths: one matching pass serves both views.

The positional :meth:`CrossViewEnhancer.forward` takes ``(left, right)`` in
that order; shifting direction is tied to the view, so the operands are not
interchangeable positionally.  :meth:`CrossViewEnhancer.forward_tagged`
accepts :class:`~stereocodec.disparity.FeatureMap` operands in either order
and dispatches on their view tags, which makes the result exactly
symmetric under argument swap.
"""

import torch
import torch.nn as nn

from stereocodec.disparity import (
    LEFT,
    RIGHT,
    FeatureMap,
    VolumeAggregator,
    aggregate,
    match_views,
)
from stereocodec.layers import ResidualBlock, conv3x3, deconv3x3

ABLATION_MODES = (None, "no_attention", "no_shift")


class CrossViewEnhancer(nn.Module):
    """Residual cross-view enhancement block.

    Args:
        channels: feature channels of both views.
        max_shift: number of candidate shift planes at the internal
            (downsampled) resolution.
        downsample_stride: internal downsampling factor before matching.
    """

    def __init__(self, channels: int, max_shift: int, downsample_stride: int = 2):
        super().__init__()
        if max_shift < 1:
            raise ValueError(f"max_shift must be >= 1, got {max_shift}")
        self.max_shift = max_shift
        self.down = conv3x3(channels, channels, stride=downsample_stride)
        self.aggregator = VolumeAggregator(channels)
        self.refine = ResidualBlock(channels)
        self.up = deconv3x3(channels, channels, stride=downsample_stride)
        # Zero the residual projection so the block starts as an exact
        # identity.  A randomly initialized branch leaks the other view's
        # content into every feature map, which roughly doubles the latent
        # rate and takes far longer to train away than it saves.
        nn.init.zeros_(self.up.weight)
        nn.init.zeros_(self.up.bias)

    def forward(self, left: torch.Tensor, right: torch.Tensor,
                mode: str | None = None) -> tuple[torch.Tensor, torch.Tensor]:
        """Enhance a (left, right) feature pair; returns the enhanced pair.

        ``mode`` is ``None`` for full behaviour, or one of the ablations
        understood by :func:`stereocodec.disparity.match_views`.
        """
        if mode not in ABLATION_MODES:
            raise ValueError(f"unknown ablation mode: {mode!r}")
        down_l = self.down(left)
        down_r = self.down(right)
        score, vol_l, vol_r = match_views(down_l, down_r, self.max_shift, mode)
        # Each view aggregates the other view's weighted volume.
        cross_l = self.refine(aggregate(score, vol_r, self.aggregator))
        cross_r = self.refine(aggregate(score, vol_l, self.aggregator))
        up_l = self.up(cross_l)[..., : left.shape[-2], : left.shape[-1]]
        up_r = self.up(cross_r)[..., : right.shape[-2], : right.shape[-1]]
        return left + up_l, right + up_r

    def forward_tagged(self, a: FeatureMap, b: FeatureMap,
                       mode: str | None = None) -> tuple[FeatureMap, FeatureMap]:
        """Tag-dispatched enhancement, symmetric under operand swap."""
        if {a.view, b.view} != {LEFT, RIGHT}:
            raise ValueError(f"need one feature map per view, got {a.view!r}, {b.view!r}")
        if a.view == LEFT:
            new_l, new_r = self.forward(a.data, b.data, mode)
        else:
            new_l, new_r = self.forward(b.data, a.data, mode)
        out_by_view = {LEFT: new_l, RIGHT: new_r}
        return (
            FeatureMap(out_by_view[a.view], a.view, a.stride),
            FeatureMap(out_by_view[b.view], b.view, b.stride),
        )

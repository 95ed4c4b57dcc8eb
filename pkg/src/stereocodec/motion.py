"""Motion estimation and temporal context mining.

Motion is estimated per view with a coarse-to-fine pyramid: the same small
refinement network runs at each level on (current frame, warped reference,
upsampled flow) and predicts a flow residual.  The final layer is
zero-initialized so the estimator starts from the identity (zero flow),
which keeps early training and static scenes well behaved.

:class:`TemporalContextMiner` turns the previous frame's decoded feature map
and a decoded flow field into a three-scale context pyramid (strides 1, 2,
4) used to condition the current frame's codec.
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from stereocodec.layers import ResidualBlock, bilinear_warp, conv3x3


class _FlowRefiner(nn.Module):
    def __init__(self, hidden: int = 32):
        super().__init__()
        self.net = nn.Sequential(
            conv3x3(8, hidden),
            nn.LeakyReLU(0.1, inplace=True),
            conv3x3(hidden, hidden),
            nn.LeakyReLU(0.1, inplace=True),
            conv3x3(hidden, 2),
        )
        nn.init.zeros_(self.net[-1].weight)
        nn.init.zeros_(self.net[-1].bias)

    def forward(self, x):
        return self.net(x)


class PyramidFlowEstimator(nn.Module):
    """Dense flow from a reference frame to the current frame.

    Weights are shared across pyramid levels and across views.
    """

    def __init__(self, levels: int = 3, hidden: int = 32):
        super().__init__()
        self.levels = levels
        self.refiner = _FlowRefiner(hidden)

    def forward(self, current: torch.Tensor, reference: torch.Tensor) -> torch.Tensor:
        cur_pyr = [current]
        ref_pyr = [reference]
        for _ in range(self.levels - 1):
            cur_pyr.append(F.avg_pool2d(cur_pyr[-1], 2))
            ref_pyr.append(F.avg_pool2d(ref_pyr[-1], 2))
        b = current.shape[0]
        coarse = cur_pyr[-1]
        flow = current.new_zeros(b, 2, coarse.shape[-2], coarse.shape[-1])
        for level in reversed(range(self.levels)):
            if level < self.levels - 1:
                flow = 2.0 * F.interpolate(flow, size=cur_pyr[level].shape[-2:],
                                           mode="bilinear", align_corners=False)
            warped = bilinear_warp(ref_pyr[level], flow)
            flow = flow + self.refiner(torch.cat([cur_pyr[level], warped, flow], dim=1))
        return flow


def scaled_warp(features: torch.Tensor, flow: torch.Tensor, factor: int) -> torch.Tensor:
    """Warp a stride-``factor`` feature map by a full-resolution flow."""
    if factor == 1:
        return bilinear_warp(features, flow)
    scaled = F.avg_pool2d(flow, factor) / factor
    return bilinear_warp(features, scaled)


class TemporalContextMiner(nn.Module):
    """Multi-scale temporal context from previous features and decoded flow."""

    def __init__(self, feature_channels: int, context_channels: int):
        super().__init__()
        cf, cc = feature_channels, context_channels
        self.down1 = conv3x3(cf, cf, stride=2)
        self.down2 = conv3x3(cf, cf, stride=2)
        self.refine1 = nn.Sequential(conv3x3(cf, cc), ResidualBlock(cc))
        self.refine2 = nn.Sequential(conv3x3(cf, cc), ResidualBlock(cc))
        self.refine3 = nn.Sequential(conv3x3(cf, cc), ResidualBlock(cc))

    def forward(self, feat_prev: torch.Tensor, flow: torch.Tensor) -> list[torch.Tensor]:
        f1 = feat_prev
        f2 = F.leaky_relu(self.down1(f1), 0.1)
        f3 = F.leaky_relu(self.down2(f2), 0.1)
        ctx1 = self.refine1(scaled_warp(f1, flow, 1))
        ctx2 = self.refine2(scaled_warp(f2, flow, 2))
        ctx3 = self.refine3(scaled_warp(f3, flow, 4))
        return [ctx1, ctx2, ctx3]

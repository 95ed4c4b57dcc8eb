"""Small shared network blocks."""

import torch
import torch.nn as nn
import torch.nn.functional as F


def conv3x3(in_ch: int, out_ch: int, stride: int = 1) -> nn.Conv2d:
    return nn.Conv2d(in_ch, out_ch, kernel_size=3, stride=stride, padding=1)


def deconv3x3(in_ch: int, out_ch: int, stride: int = 2) -> nn.ConvTranspose2d:
    # output_padding keeps H_out = stride * H_in for odd kernels
    return nn.ConvTranspose2d(in_ch, out_ch, kernel_size=3, stride=stride,
                              padding=1, output_padding=stride - 1)


class ResidualBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = conv3x3(channels, channels)
        self.conv2 = conv3x3(channels, channels)

    def forward(self, x):
        h = self.conv2(F.leaky_relu(self.conv1(x), 0.1))
        return x + h


class DepthConvBlock(nn.Module):
    """1x1 -> depthwise 3x3 -> 1x1 with a residual connection."""

    def __init__(self, in_ch: int, out_ch: int):
        super().__init__()
        self.pw_in = nn.Conv2d(in_ch, out_ch, kernel_size=1)
        self.dw = nn.Conv2d(out_ch, out_ch, kernel_size=3, padding=1, groups=out_ch)
        self.pw_out = nn.Conv2d(out_ch, out_ch, kernel_size=1)
        self.skip = nn.Identity() if in_ch == out_ch else nn.Conv2d(in_ch, out_ch, kernel_size=1)

    def forward(self, x):
        h = F.leaky_relu(self.pw_in(x), 0.1)
        h = F.leaky_relu(self.dw(h), 0.1)
        h = self.pw_out(h)
        return self.skip(x) + h


def bilinear_warp(x: torch.Tensor, flow: torch.Tensor) -> torch.Tensor:
    """Backward-warp ``x`` by a dense flow field.

    ``flow[:, 0]`` is the horizontal displacement in pixels, ``flow[:, 1]``
    vertical; output pixel ``(h, w)`` samples ``x`` at
    ``(h + flow_y, w + flow_x)`` with bilinear interpolation and border
    clamping.
    """
    b, _, h, w = x.shape
    ys = torch.arange(h, dtype=x.dtype, device=x.device)
    xs = torch.arange(w, dtype=x.dtype, device=x.device)
    grid_y, grid_x = torch.meshgrid(ys, xs, indexing="ij")
    sample_x = grid_x.unsqueeze(0) + flow[:, 0]
    sample_y = grid_y.unsqueeze(0) + flow[:, 1]
    # normalize to [-1, 1] for grid_sample
    norm_x = 2.0 * sample_x / max(w - 1, 1) - 1.0
    norm_y = 2.0 * sample_y / max(h - 1, 1) - 1.0
    grid = torch.stack((norm_x, norm_y), dim=-1)
    return F.grid_sample(x, grid, mode="bilinear", padding_mode="border",
                         align_corners=True)

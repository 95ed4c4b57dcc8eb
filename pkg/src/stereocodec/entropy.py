"""Interleaved conditional entropy model for stereo latent pairs.

The latents of both views are split into ``N`` equal channel slices and
coded in a view-interleaved order::

    (L, 0), (R, 0), (L, 1), (R, 1), ..., (L, N-1), (R, N-1)

When slice ``n`` of one view is coded, three kinds of side information are
available to its parameter estimator:

* intra-view priors: the already decoded slices ``0 .. n-1`` of the same
  view;
* cross-view priors: the already decoded slices of the *other* view
  (slices ``0 .. n-1`` for the left view, ``0 .. n`` for the right view,
  since the left slice of the same index is coded first);
* fused spatial priors: hyperprior features, optionally combined with
  multi-scale temporal context, split into per-slice groups.  Slice ``n``
  may use groups ``0 .. n``.

Cross-view priors come from the other camera and are therefore horizontally
displaced.  A :class:`CrossViewAligner` warps them toward the current view
with the shift-volume attention from :mod:`stereocodec.disparity`, using the
current view's fused prior group ``n`` as the alignment anchor.  The anchor
feeds the matcher directly at latent resolution (a 1x1 channel projection
only, no resampling, no additive mixing) so that its geometry is untouched.

Each slice is quantized by mean-subtracted rounding (:func:`quantize_slice`)
and its rate is the floored Gaussian bin mass (:func:`rate_slice`).  The
same estimator path drives training (:meth:`InterleavedEntropyModel.forward`),
bitstream writing (:meth:`~InterleavedEntropyModel.encode`) and bitstream
reading (:meth:`~InterleavedEntropyModel.decode`), which keeps the three in
exact agreement.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from stereocodec.disparity import LEFT, RIGHT, VolumeAggregator, aggregate, match_views
from stereocodec.layers import DepthConvBlock, conv3x3, deconv3x3

PROBABILITY_FLOOR = 2.0 ** -16
SIGMA_MIN = 0.11
_SQRT2 = math.sqrt(2.0)


def slice_channels(y: torch.Tensor, num_slices: int) -> list[torch.Tensor]:
    """Split ``[B, C, H, W]`` (or ``[C, H, W]``) evenly along channels."""
    channels = y.shape[-3]
    if channels % num_slices != 0:
        raise ValueError(f"{channels} channels not divisible into {num_slices} slices")
    return list(torch.split(y, channels // num_slices, dim=-3))


def merge_slices(slices: list[torch.Tensor]) -> torch.Tensor:
    return torch.cat(slices, dim=-3)


def coding_order(num_slices: int) -> list[tuple[str, int]]:
    """View-interleaved slice schedule: left before right within each index."""
    order = []
    for n in range(num_slices):
        order.append((LEFT, n))
        order.append((RIGHT, n))
    return order


def quantize_slice(y: torch.Tensor, mu: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Mean-subtracted rounding: ``y_hat = mu + round(y - mu)``.

    Returns ``(y_hat, delta)`` where ``delta = round(y - mu)`` is exactly
    integer valued.  When ``y`` carries gradients the rounding uses a
    straight-through estimator, so ``d y_hat / d y = 1`` while the forward
    value is the true quantized reconstruction.
    """
    delta = torch.round(y.detach() - mu.detach())
    if y.requires_grad or mu.requires_grad:
        # Forward value is mu + delta; the gradient passes through y only.
        y_hat = y + (mu.detach() + delta - y.detach())
    else:
        y_hat = mu + delta
    return y_hat, delta


def gaussian_bin_mass(delta: torch.Tensor, sigma: torch.Tensor) -> torch.Tensor:
    """Probability of the unit bin centred on ``delta`` under N(0, sigma^2).

    Evaluated through the complementary error function of the *far* bin
    edge, which stays accurate when ``|delta| >> sigma``.
    """
    a = torch.abs(delta)
    upper = 0.5 * torch.erfc((a - 0.5) / (sigma * _SQRT2))
    lower = 0.5 * torch.erfc((a + 0.5) / (sigma * _SQRT2))
    return upper - lower


def rate_slice(y_hat: torch.Tensor, mu: torch.Tensor, sigma: torch.Tensor) -> torch.Tensor:
    """Total code length of a quantized slice in bits.

    Each element contributes ``-log2`` of its Gaussian bin mass, floored at
    ``2**-16`` so that outliers cost at most 16 bits and the estimate stays
    finite.  Differentiable in ``mu`` and ``sigma`` (and in ``y_hat`` through
    a straight-through quantizer).
    """
    mass = gaussian_bin_mass(y_hat - mu, sigma)
    mass = torch.clamp(mass, min=PROBABILITY_FLOOR)
    return -torch.log2(mass).sum()


class FactorizedPrior(nn.Module):
    """Learned univariate density per channel, for hyper-latent coding.

    Each channel gets an independent monotone CDF built from a small chain
    of softplus-weighted affine layers with tanh gating.  The probability of
    integer ``z`` is ``cdf(z + 0.5) - cdf(z - 0.5)``.
    """

    def __init__(self, channels: int, hidden: tuple[int, ...] = (3, 3, 3),
                 init_scale: float = 10.0):
        super().__init__()
        self.channels = channels
        dims = (1,) + tuple(hidden) + (1,)
        scale = init_scale ** (1.0 / (len(dims) - 1))
        self._weights = nn.ParameterList()
        self._biases = nn.ParameterList()
        self._gates = nn.ParameterList()
        for k in range(len(dims) - 1):
            init = math.log(math.expm1(1.0 / scale / dims[k + 1]))
            self._weights.append(nn.Parameter(torch.full((channels, dims[k + 1], dims[k]), init)))
            self._biases.append(nn.Parameter(torch.empty(channels, dims[k + 1], 1).uniform_(-0.5, 0.5)))
            if k < len(dims) - 2:
                self._gates.append(nn.Parameter(torch.zeros(channels, dims[k + 1], 1)))

    def _logits(self, x: torch.Tensor) -> torch.Tensor:
        # x: [C, M] -> logits of the CDF at each point, [C, M]
        h = x.unsqueeze(1)  # [C, 1, M]
        for k, (w, b) in enumerate(zip(self._weights, self._biases)):
            h = torch.matmul(F.softplus(w), h) + b
            if k < len(self._gates):
                h = h + torch.tanh(self._gates[k]) * torch.tanh(h)
        return h.squeeze(1)

    def bin_mass(self, z: torch.Tensor) -> torch.Tensor:
        """Probability of the unit bin centred on ``z``; shape preserved."""
        if z.dim() == 3:
            z = z.unsqueeze(0)
        b, c, h, w = z.shape
        flat = z.permute(1, 0, 2, 3).reshape(c, -1)
        upper = torch.sigmoid(self._logits(flat + 0.5))
        lower = torch.sigmoid(self._logits(flat - 0.5))
        mass = (upper - lower).reshape(c, b, h, w).permute(1, 0, 2, 3)
        return mass

    def bits(self, z_hat: torch.Tensor) -> torch.Tensor:
        """Total floored code length of a quantized hyper-latent, in bits."""
        mass = torch.clamp(self.bin_mass(z_hat), min=PROBABILITY_FLOOR)
        return -torch.log2(mass).sum()

    @torch.no_grad()
    def pmf_table(self, lo: int, hi: int) -> np.ndarray:
        """Per-channel bin masses over the integer range ``lo .. hi``.

        Returns a float64 array of shape ``[channels, hi - lo + 1]`` for
        entropy-coder table construction.
        """
        grid = torch.arange(lo, hi + 1, dtype=torch.float32)
        pts = grid.repeat(self.channels, 1)
        upper = torch.sigmoid(self._logits(pts + 0.5))
        lower = torch.sigmoid(self._logits(pts - 0.5))
        return (upper - lower).double().numpy()


def quantize_hyper(z: torch.Tensor) -> torch.Tensor:
    """Round a hyper-latent to integers with a straight-through gradient."""
    if z.requires_grad:
        return z + (torch.round(z.detach()) - z.detach())
    return torch.round(z)


class HyperCoder(nn.Module):
    """Hyper-analysis/synthesis pair around the latent."""

    def __init__(self, latent_channels: int, hyper_channels: int, out_channels: int):
        super().__init__()
        self.analysis = nn.Sequential(
            conv3x3(latent_channels, hyper_channels),
            nn.LeakyReLU(0.1, inplace=True),
            conv3x3(hyper_channels, hyper_channels, stride=2),
            nn.LeakyReLU(0.1, inplace=True),
            conv3x3(hyper_channels, hyper_channels, stride=2),
        )
        self.synthesis = nn.Sequential(
            deconv3x3(hyper_channels, hyper_channels),
            nn.LeakyReLU(0.1, inplace=True),
            deconv3x3(hyper_channels, out_channels),
            nn.LeakyReLU(0.1, inplace=True),
            conv3x3(out_channels, out_channels),
        )

    def encode(self, y: torch.Tensor) -> torch.Tensor:
        return self.analysis(y)

    def decode(self, z_hat: torch.Tensor, latent_hw: tuple[int, int]) -> torch.Tensor:
        feats = self.synthesis(z_hat)
        return feats[..., : latent_hw[0], : latent_hw[1]]


class ContextCondenser(nn.Module):
    """Fold a multi-scale context pyramid down to latent resolution.

    Input scales are strides 1, 2 and 4 relative to the frame; the output is
    at the latent stride (16).  Each downsampling step concatenates the next
    pyramid level before halving.
    """

    def __init__(self, context_channels: int, out_channels: int):
        super().__init__()
        c = context_channels
        self.step1 = conv3x3(c, c, stride=2)            # s1 -> s2
        self.step2 = conv3x3(2 * c, c, stride=2)        # s2 -> s4
        self.step3 = conv3x3(2 * c, c, stride=2)        # s4 -> s8
        self.step4 = conv3x3(c, out_channels, stride=2)  # s8 -> s16

    def forward(self, pyramid: list[torch.Tensor]) -> torch.Tensor:
        c1, c2, c3 = pyramid
        h = F.leaky_relu(self.step1(c1), 0.1)
        h = F.leaky_relu(self.step2(torch.cat([h[..., : c2.shape[-2], : c2.shape[-1]], c2], dim=1)), 0.1)
        h = F.leaky_relu(self.step3(torch.cat([h[..., : c3.shape[-2], : c3.shape[-1]], c3], dim=1)), 0.1)
        return self.step4(h)


class PriorFusion(nn.Module):
    """Fuse hyper-synthesis output (and optional context) into slice priors."""

    def __init__(self, hyper_out_channels: int, phi_channels: int,
                 context_channels: int | None = None):
        super().__init__()
        self.condenser = None
        in_ch = hyper_out_channels
        if context_channels is not None:
            self.condenser = ContextCondenser(context_channels, hyper_out_channels)
            in_ch = 2 * hyper_out_channels
        self.fuse = nn.Sequential(
            DepthConvBlock(in_ch, phi_channels),
            DepthConvBlock(phi_channels, phi_channels),
        )

    def forward(self, hyper_feats: torch.Tensor,
                context_pyramid: list[torch.Tensor] | None = None) -> torch.Tensor:
        if (context_pyramid is None) != (self.condenser is None):
            raise ValueError("context pyramid presence must match construction")
        if self.condenser is not None:
            ctx = self.condenser(context_pyramid)
            ctx = ctx[..., : hyper_feats.shape[-2], : hyper_feats.shape[-1]]
            hyper_feats = torch.cat([hyper_feats, ctx], dim=1)
        return self.fuse(hyper_feats)


class CrossViewAligner(nn.Module):
    """Align decoded cross-view slices to the current view.

    The anchor (the current view's fused prior group for this slice) and the
    concatenated cross-view slices are each projected to a common width by a
    1x1 convolution, matched with shift-volume attention, and the cross-view
    volume is aggregated under the shared score.
    """

    def __init__(self, anchor_channels: int, cross_channels: int,
                 align_channels: int, max_shift: int):
        super().__init__()
        self.max_shift = max_shift
        self.anchor_proj = nn.Conv2d(anchor_channels, align_channels, kernel_size=1)
        self.cross_proj = nn.Conv2d(cross_channels, align_channels, kernel_size=1)
        self.aggregator = VolumeAggregator(align_channels)

    def _volumes(self, anchor: torch.Tensor, cross: torch.Tensor, view: str,
                 mode: str | None):
        a = self.anchor_proj(anchor)
        c = self.cross_proj(cross)
        # The anchor belongs to ``view``; the cross slices to the other one.
        if view == LEFT:
            return match_views(a, c, self.max_shift, mode), "right"
        score, vol_l, vol_r = match_views(c, a, self.max_shift, mode)
        return (score, vol_l, vol_r), "left"

    def forward(self, anchor: torch.Tensor, cross_slices: list[torch.Tensor],
                view: str, mode: str | None = None) -> torch.Tensor:
        cross = torch.cat(cross_slices, dim=-3)
        (score, vol_l, vol_r), take = self._volumes(anchor, cross, view, mode)
        cross_volume = vol_r if take == "right" else vol_l
        return aggregate(score, cross_volume, self.aggregator)

    def attention(self, anchor: torch.Tensor, cross_slices: list[torch.Tensor],
                  view: str, mode: str | None = None) -> torch.Tensor:
        """Expose the normalized score volume (for inspection and tests)."""
        cross = torch.cat(cross_slices, dim=-3)
        (score, _, _), _ = self._volumes(anchor, cross, view, mode)
        return score


class SliceEstimator(nn.Module):
    """Predict (mu, sigma) for one slice from its assembled priors."""

    def __init__(self, in_channels: int, hidden_channels: int, slice_channels: int,
                 sigma_min: float = SIGMA_MIN):
        super().__init__()
        self.sigma_min = sigma_min
        self.body = nn.Sequential(
            DepthConvBlock(in_channels, hidden_channels),
            DepthConvBlock(hidden_channels, hidden_channels),
        )
        self.head = nn.Conv2d(hidden_channels, 2 * slice_channels, kernel_size=1)
        # Start sigma near 1: softplus(x) = 1 at x = ln(e - 1).
        with torch.no_grad():
            self.head.bias[slice_channels:].fill_(math.log(math.e - 1.0))

    def forward(self, priors: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        mu, sigma_raw = self.head(self.body(priors)).chunk(2, dim=1)
        sigma = torch.clamp(F.softplus(sigma_raw), min=self.sigma_min)
        return mu, sigma


@dataclass
class EncodedLatents:
    """Encoder-side record of one latent pair's pass through the model."""

    y_hat: dict
    bits: dict
    z_hat: dict = field(default_factory=dict)


class InterleavedEntropyModel(nn.Module):
    """Entropy model over a stereo latent pair.

    Args:
        latent_channels: channels of each view's latent.
        num_slices: number of channel slices ``N``.
        hyper_channels: hyper-latent channels.
        phi_channels: total width of the fused prior (split into ``N``
            groups).
        align_channels: width of the cross-view alignment space.
        max_shift: shift planes used by the cross-view aligners.
        context_channels: width of the temporal context pyramid, or ``None``
            for a model without temporal conditioning (motion latents).
        sigma_min: lower bound on predicted scales.
    """

    def __init__(self, latent_channels: int, num_slices: int = 4,
                 hyper_channels: int = 48, phi_channels: int = 64,
                 align_channels: int = 16, max_shift: int = 12,
                 context_channels: int | None = None,
                 sigma_min: float = SIGMA_MIN):
        super().__init__()
        if latent_channels % num_slices != 0:
            raise ValueError("latent_channels must be divisible by num_slices")
        if phi_channels % num_slices != 0:
            raise ValueError("phi_channels must be divisible by num_slices")
        self.latent_channels = latent_channels
        self.num_slices = num_slices
        self.slice_width = latent_channels // num_slices
        self.phi_width = phi_channels // num_slices
        self.hyper_channels = hyper_channels
        self.cross_view_enabled = True

        hyper_out = 2 * hyper_channels
        self.hyper = HyperCoder(latent_channels, hyper_channels, hyper_out)
        self.prior = FactorizedPrior(hyper_channels)
        self.fusion = PriorFusion(hyper_out, phi_channels, context_channels)

        self.align_channels = align_channels
        self.cross_view = nn.ModuleDict()
        self.estimators = nn.ModuleDict()
        hidden = max(2 * self.slice_width, 32)
        for view, n in coding_order(num_slices):
            n_cross = n if view == LEFT else n + 1
            key = f"{view}{n}"
            if n_cross > 0:
                self.cross_view[key] = CrossViewAligner(
                    anchor_channels=self.phi_width,
                    cross_channels=n_cross * self.slice_width,
                    align_channels=align_channels,
                    max_shift=max_shift,
                )
            est_in = n * self.slice_width + align_channels + (n + 1) * self.phi_width
            self.estimators[key] = SliceEstimator(est_in, hidden, self.slice_width,
                                                  sigma_min)

    # -- prior assembly -----------------------------------------------------

    def _fused_prior(self, y: torch.Tensor, context_pyramid, collect: dict,
                     view: str) -> list[torch.Tensor]:
        z = self.hyper.encode(y)
        z_hat = quantize_hyper(z)
        collect["z_bits"][view] = self.prior.bits(z_hat)
        collect["z_hat"][view] = z_hat
        feats = self.hyper.decode(z_hat, (y.shape[-2], y.shape[-1]))
        phi = self.fusion(feats, context_pyramid)
        return slice_channels(phi, self.num_slices)

    def _prior_from_zhat(self, z_hat: torch.Tensor, latent_hw, context_pyramid):
        feats = self.hyper.decode(z_hat, latent_hw)
        phi = self.fusion(feats, context_pyramid)
        return slice_channels(phi, self.num_slices)

    def estimate_params(self, view: str, n: int, intra_slices: list[torch.Tensor],
                        phi_slices: list[torch.Tensor],
                        cross_slices: list[torch.Tensor],
                        mode: str | None = None) -> tuple[torch.Tensor, torch.Tensor]:
        """Assemble priors for slice ``n`` of ``view`` and predict (mu, sigma).

        ``intra_slices`` are this view's decoded slices ``0 .. n-1``,
        ``phi_slices`` the fused prior groups ``0 .. n`` and ``cross_slices``
        the other view's decoded slices available under the interleaved
        schedule.  Exactly this method backs training, encoding and
        decoding.
        """
        key = f"{view}{n}"
        anchor = phi_slices[n]
        if cross_slices and self.cross_view_enabled:
            aligned = self.cross_view[key](anchor, cross_slices, view, mode)
        else:
            ref = anchor
            shape = list(ref.shape)
            shape[-3] = self.align_channels
            aligned = ref.new_zeros(shape)
        parts = intra_slices + [aligned] + phi_slices[: n + 1]
        return self.estimators[key](torch.cat(parts, dim=-3))

    def _cross_available(self, decoded: dict, view: str, n: int) -> list[torch.Tensor]:
        other = RIGHT if view == LEFT else LEFT
        count = n if view == LEFT else n + 1
        return decoded[other][:count]

    # -- training path ------------------------------------------------------

    def forward(self, y: dict, context_pyramids: dict | None = None,
                mode: str | None = None) -> EncodedLatents:
        """Differentiable rate estimation pass over a latent pair.

        ``y`` maps view to latent; ``context_pyramids`` maps view to a
        pyramid list (or is ``None`` for context-free models).  Returns
        quantized latents and per-stream bit totals.
        """
        collect = {"z_bits": {}, "z_hat": {}}
        phi = {}
        slices = {}
        for view in (LEFT, RIGHT):
            ctx = None if context_pyramids is None else context_pyramids[view]
            phi[view] = self._fused_prior(y[view], ctx, collect, view)
            slices[view] = slice_channels(y[view], self.num_slices)
        decoded = {LEFT: [], RIGHT: []}
        y_bits = {LEFT: [], RIGHT: []}
        for view, n in coding_order(self.num_slices):
            cross = self._cross_available(decoded, view, n)
            mu, sigma = self.estimate_params(view, n, decoded[view][:n],
                                             phi[view][: n + 1], cross, mode)
            y_hat_n, _ = quantize_slice(slices[view][n], mu)
            y_bits[view].append(rate_slice(y_hat_n, mu, sigma))
            decoded[view].append(y_hat_n)
        y_hat = {v: merge_slices(decoded[v]) for v in (LEFT, RIGHT)}
        bits = {
            "y": {v: torch.stack(y_bits[v]).sum() for v in (LEFT, RIGHT)},
            "z": collect["z_bits"],
        }
        return EncodedLatents(y_hat=y_hat, bits=bits, z_hat=collect["z_hat"])

    # -- bitstream paths ----------------------------------------------------

    def _z_alphabet(self) -> tuple[int, int]:
        return (-64, 64)

    def encode(self, y: dict, coder, context_pyramids: dict | None = None,
               mode: str | None = None) -> EncodedLatents:
        """Quantize a latent pair and push its symbols into ``coder``.

        Symbol order: hyper-latent of L, hyper-latent of R, then slice
        residuals in the interleaved coding order.  The returned record
        carries the quantized latents and estimated bit totals.
        """
        with torch.no_grad():
            collect = {"z_bits": {}, "z_hat": {}}
            phi = {}
            slices = {}
            for view in (LEFT, RIGHT):
                ctx = None if context_pyramids is None else context_pyramids[view]
                phi[view] = self._fused_prior(y[view], ctx, collect, view)
                slices[view] = slice_channels(y[view], self.num_slices)
            lo, hi = self._z_alphabet()
            pmf = self.prior.pmf_table(lo, hi)
            for view in (LEFT, RIGHT):
                z_hat = collect["z_hat"][view]
                symbols = z_hat.numpy().astype(np.int32).reshape(-1)
                channels = np.broadcast_to(
                    np.arange(self.hyper_channels, dtype=np.int32)[:, None, None],
                    z_hat.shape[-3:]).reshape(-1)
                coder.push_indexed(symbols, pmf, channels, lo)
            decoded = {LEFT: [], RIGHT: []}
            y_bits = {LEFT: [], RIGHT: []}
            for view, n in coding_order(self.num_slices):
                cross = self._cross_available(decoded, view, n)
                mu, sigma = self.estimate_params(view, n, decoded[view][:n],
                                                 phi[view][: n + 1], cross, mode)
                y_hat_n, delta = quantize_slice(slices[view][n], mu)
                y_bits[view].append(rate_slice(y_hat_n, mu, sigma))
                coder.push_gaussian(delta.numpy().astype(np.int32).reshape(-1),
                                    sigma.numpy().astype(np.float32).reshape(-1))
                decoded[view].append(y_hat_n)
            y_hat = {v: merge_slices(decoded[v]) for v in (LEFT, RIGHT)}
            bits = {
                "y": {v: torch.stack(y_bits[v]).sum() for v in (LEFT, RIGHT)},
                "z": collect["z_bits"],
            }
            return EncodedLatents(y_hat=y_hat, bits=bits, z_hat=collect["z_hat"])

    def decode(self, coder, latent_hw: tuple[int, int],
               context_pyramids: dict | None = None,
               mode: str | None = None) -> dict:
        """Read a latent pair back from ``coder``; mirror of :meth:`encode`."""
        with torch.no_grad():
            h, w = latent_hw
            zh = (h + 3) // 4, (w + 3) // 4
            lo, hi = self._z_alphabet()
            pmf = self.prior.pmf_table(lo, hi)
            phi = {}
            for view in (LEFT, RIGHT):
                count = self.hyper_channels * zh[0] * zh[1]
                channels = np.broadcast_to(
                    np.arange(self.hyper_channels, dtype=np.int32)[:, None, None],
                    (self.hyper_channels, zh[0], zh[1])).reshape(-1)
                symbols = coder.read_indexed(count, pmf, channels, lo)
                z_hat = torch.from_numpy(
                    symbols.astype(np.float32).reshape(1, self.hyper_channels, *zh))
                ctx = None if context_pyramids is None else context_pyramids[view]
                phi[view] = self._prior_from_zhat(z_hat, latent_hw, ctx)
            decoded = {LEFT: [], RIGHT: []}
            for view, n in coding_order(self.num_slices):
                cross = self._cross_available(decoded, view, n)
                mu, sigma = self.estimate_params(view, n, decoded[view][:n],
                                                 phi[view][: n + 1], cross, mode)
                count = mu.numel()
                symbols = coder.read_gaussian(
                    count, sigma.numpy().astype(np.float32).reshape(-1))
                delta = torch.from_numpy(symbols.astype(np.float32)).reshape(mu.shape)
                decoded[view].append(mu + delta)
            return {v: merge_slices(decoded[v]) for v in (LEFT, RIGHT)}

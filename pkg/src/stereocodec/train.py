"""Rate-distortion training.

The full model trains in four stages:

1. single-view pretraining: cross-view enhancement blocks and cross-view
   entropy priors are disabled and frozen; everything else trains;
2. cross-view priors: the entropy models start using the other view's
   decoded slices; everything except the enhancement blocks fine-tunes;
3. enhancement only: the cross-view enhancement blocks turn on and train
   while every other parameter is frozen;
4. joint fine-tuning: everything enabled, everything trainable.

The per-step objective sums, over both views, the weighted distortion plus
the per-pixel rate of the latents and hyper-latents:
``lambda * mse + bpp(y) + bpp(z)``.

Each training clip starts from an intra-coded frame; gradients propagate
through one P-frame step at a time (the temporal buffer is detached between
frames), which keeps desk-scale training stable.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
import torch

from stereocodec.codec import StereoVideoCodec
from stereocodec.pipeline import VIEWS, StereoFrameCodec, total_bits


class TrainingDiverged(RuntimeError):
    """Loss became NaN or infinite; training aborted."""


@dataclass
class RDLossBreakdown:
    loss: torch.Tensor
    distortion: dict
    rate_bpp: dict

    def scalar(self) -> float:
        return float(self.loss.detach())


def rd_loss(output: dict, frames: dict, lam: float) -> RDLossBreakdown:
    """Weighted distortion plus per-pixel rate, summed over views.

    Distortion is the MSE of the unclamped reconstruction (clamping would
    zero gradients for out-of-range pixels early in training); rates count
    every coded stream of the frame, normalized by the per-view pixel
    count.
    """
    pixels = float(frames[VIEWS[0]].shape[0] * frames[VIEWS[0]].shape[-2]
                   * frames[VIEWS[0]].shape[-1])
    distortion = {}
    rate = {}
    loss = None
    for v in VIEWS:
        mse = torch.mean((output["x_hat_raw"][v] - frames[v]) ** 2)
        view_bits = None
        for group in output["bits"].values():
            for stream in group.values():
                part = stream[v]
                view_bits = part if view_bits is None else view_bits + part
        bpp = view_bits / pixels
        term = lam * mse + bpp
        loss = term if loss is None else loss + term
        distortion[v] = float(mse.detach())
        rate[v] = float(bpp.detach())
    return RDLossBreakdown(loss=loss, distortion=distortion, rate_bpp=rate)


@dataclass
class StageConfig:
    stage: int
    iterations: int
    lr: float
    batch_size: int = 4


def default_stage_schedule() -> dict[int, StageConfig]:
    """Desk-scale analogue of the full four-stage schedule."""
    return {
        1: StageConfig(stage=1, iterations=2000, lr=1e-4),
        2: StageConfig(stage=2, iterations=1000, lr=1e-5),
        3: StageConfig(stage=3, iterations=200, lr=1e-5),
        4: StageConfig(stage=4, iterations=1000, lr=1e-5),
    }


def _is_enhancer_param(name: str) -> bool:
    return ".enhancers." in name


def _is_cross_view_param(name: str) -> bool:
    return ".cross_view." in name


def stage_parameter_mask(model: StereoFrameCodec, stage: int) -> dict[str, bool]:
    """Which parameters train in a given stage, by qualified name."""
    if stage not in (1, 2, 3, 4):
        raise ValueError(f"stage must be 1..4, got {stage}")
    mask = {}
    for name, _ in model.named_parameters():
        if stage == 1:
            mask[name] = not (_is_enhancer_param(name) or _is_cross_view_param(name))
        elif stage == 2:
            mask[name] = not _is_enhancer_param(name)
        elif stage == 3:
            mask[name] = _is_enhancer_param(name)
        else:
            mask[name] = True
    return mask


def apply_stage(model: StereoFrameCodec, stage: int) -> None:
    """Set the module switches and parameter freezing for a stage."""
    model.fer_enabled = stage >= 3
    model.cross_view_enabled = stage >= 2
    mask = stage_parameter_mask(model, stage)
    for name, param in model.named_parameters():
        param.requires_grad_(mask[name])


def intra_reference(frames: dict) -> dict:
    """8-bit intra reconstruction used as the clip's starting reference."""
    return {v: torch.round(torch.clamp(frames[v], 0.0, 1.0) * 255.0) / 255.0
            for v in VIEWS}


def run_stage(codec: StereoVideoCodec,
              data_source: Callable[[int, np.random.Generator], dict],
              stage_cfg: StageConfig, lam: float, seed: int = 0,
              callback: Callable[[int, float], None] | None = None,
              switch_overrides: dict[str, bool] | None = None) -> list[float]:
    """Train one stage; returns the per-iteration loss curve.

    ``data_source(batch_size, rng)`` must yield ``{view: [B, T, 3, H, W]}``
    clips in [0, 1].  Raises :class:`TrainingDiverged` when the loss stops
    being finite.  Runs are deterministic for a fixed seed, data source and
    starting state.

    ``switch_overrides`` force module switches (``fer_enabled``,
    ``cross_view_enabled``) after the stage defaults are applied, which is
    how ablation runs keep an identical training budget while one pathway
    is held off.

    Training runs single threaded: at these tensor sizes torch's inter-op
    parallelism costs far more than it saves, and one thread keeps runs
    reproducible.
    """
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    model = codec.frame_codec
    model.train()
    apply_stage(model, stage_cfg.stage)
    for name, value in (switch_overrides or {}).items():
        if not hasattr(model, name):
            raise ValueError(f"unknown model switch {name!r}")
        setattr(model, name, value)
    params = [p for p in model.parameters() if p.requires_grad]
    if not params:
        raise ValueError("stage has no trainable parameters")
    opt = torch.optim.Adam(params, lr=stage_cfg.lr)
    losses = []
    threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        for iteration in range(stage_cfg.iterations):
            batch = data_source(stage_cfg.batch_size, rng)
            t_total = batch[VIEWS[0]].shape[1]
            buffer_frames = intra_reference({v: batch[v][:, 0] for v in VIEWS})
            buffer = model.init_buffer(buffer_frames)
            step_losses = []
            for t in range(1, t_total):
                frames = {v: batch[v][:, t] for v in VIEWS}
                out = model(frames, buffer)
                step_losses.append(rd_loss(out, frames, lam).loss)
                buffer = {v: {"frame": out["x_hat"][v].detach(),
                              "feat": out["features"][v].detach()} for v in VIEWS}
            loss = torch.stack(step_losses).mean()
            if not torch.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at iteration {iteration}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(float(loss.detach()))
            if callback is not None:
                callback(iteration, losses[-1])
    finally:
        torch.set_num_threads(threads)
    model.eval()
    return losses


def run_schedule(codec: StereoVideoCodec, data_source, lam: float,
                 schedule: dict[int, StageConfig] | None = None,
                 seed: int = 0) -> dict[int, list[float]]:
    """Run stages 1..4 in order; returns each stage's loss curve."""
    schedule = schedule or default_stage_schedule()
    curves = {}
    for stage in sorted(schedule):
        curves[stage] = run_stage(codec, data_source, schedule[stage], lam,
                                  seed=seed + stage)
    return curves


def loss_reduction(losses: list[float], window_frac: float = 0.1) -> float:
    """Relative drop between the smoothed head and tail of a loss curve."""
    if len(losses) < 2:
        raise ValueError("need at least two loss values")
    window = max(1, int(len(losses) * window_frac))
    head = float(np.mean(losses[:window]))
    tail = float(np.mean(losses[-window:]))
    return (head - tail) / head


def train_intra_codec(intra, data_source, iterations: int, lam: float,
                      lr: float = 1e-4, batch_size: int = 8, seed: int = 0) -> list[float]:
    """Standalone rate-distortion training for the learned intra codec."""
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    intra.train()
    opt = torch.optim.Adam(intra.parameters(), lr=lr)
    losses = []
    threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        for iteration in range(iterations):
            batch = data_source(batch_size, rng)
            frames = torch.cat([batch[v][:, 0] for v in VIEWS], dim=0)
            x_hat, bits = intra(frames)
            pixels = float(frames.shape[0] * frames.shape[-2] * frames.shape[-1])
            loss = lam * torch.mean((x_hat - frames) ** 2) + bits / pixels
            if not torch.isfinite(loss):
                raise TrainingDiverged(f"non-finite intra loss at iteration {iteration}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(float(loss.detach()))
    finally:
        torch.set_num_threads(threads)
    intra.eval()
    return losses


def grad_check(fn: Callable[..., torch.Tensor], inputs: list[torch.Tensor],
               eps: float = 1e-4, sample: int | None = None,
               seed: int = 0) -> float:
    """Compare autograd gradients of ``fn`` against central differences.

    ``fn`` maps the (float64, grad-enabled) input tensors to a scalar.
    Checks every element, or ``sample`` random elements per input.  Returns
    the maximum relative error ``|a - n| / max(|a|, |n|, 1e-3)``.
    """
    inputs = [t.detach().double().requires_grad_(True) for t in inputs]
    out = fn(*inputs)
    grads = torch.autograd.grad(out, inputs)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for tensor, grad in zip(inputs, grads):
        flat = tensor.detach().reshape(-1)
        n_elem = flat.numel()
        if sample is not None and sample < n_elem:
            idx = rng.choice(n_elem, size=sample, replace=False)
        else:
            idx = np.arange(n_elem)
        for i in idx:
            orig = float(flat[i])
            flat[i] = orig + eps
            hi = float(fn(*inputs).detach())
            flat[i] = orig - eps
            lo = float(fn(*inputs).detach())
            flat[i] = orig
            numeric = (hi - lo) / (2.0 * eps)
            analytic = float(grad.reshape(-1)[i])
            denom = max(abs(analytic), abs(numeric), 1e-3)
            worst = max(worst, abs(analytic - numeric) / denom)
    return worst

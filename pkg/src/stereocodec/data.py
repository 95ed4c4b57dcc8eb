"""Synthetic rectified stereo clips, and frame-directory I/O.

The generator composes two textured layers: a background at small disparity
and a foreground rectangle at larger disparity, both moving with constant
per-clip velocities.  The right view samples the same scene shifted
horizontally by each layer's disparity, so occlusion boundaries,
disocclusions and cross-view redundancy all behave like a real rectified
rig.  Independent per-view sensor noise keeps each view informative about
the other (denoising is possible, but only with alignment).

Frame directories use flat naming: ``left_0000.png``, ``right_0000.png``,
and so on, 8-bit RGB.
"""

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from scipy import ndimage

from stereocodec.pipeline import VIEWS


@dataclass
class SceneParams:
    height: int = 64
    width: int = 64
    frames: int = 3
    texture_cells: int = 5
    background_disparity: tuple[float, float] = (4.0, 10.0)
    foreground_disparity: tuple[float, float] = (14.0, 26.0)
    motion: float = 2.0
    view_noise: float = 0.015
    foreground_extent: tuple[float, float] = (0.3, 0.55)


def _smooth_texture(rng: np.random.Generator, height: int, width: int,
                    cells: int) -> np.ndarray:
    grid = rng.random((cells, cells, 3))
    zoom = (height / cells, width / cells, 1)
    return ndimage.zoom(grid, zoom, order=1, mode="nearest", grid_mode=True)


def _sample(canvas: np.ndarray, off_y: float, off_x: float,
            height: int, width: int) -> np.ndarray:
    ys = np.arange(height, dtype=np.float64) + off_y
    xs = np.arange(width, dtype=np.float64) + off_x
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    out = np.empty((height, width, canvas.shape[2]), dtype=np.float64)
    for c in range(canvas.shape[2]):
        out[..., c] = ndimage.map_coordinates(canvas[..., c], [yy, xx],
                                              order=1, mode="nearest")
    return out


def generate_clip(rng: np.random.Generator,
                  params: SceneParams | None = None) -> dict:
    """One synthetic stereo clip: ``{view: float32 [T, 3, H, W]}`` in [0, 1]."""
    p = params or SceneParams()
    h, w, t_total = p.height, p.width, p.frames
    margin = int(np.ceil(p.foreground_disparity[1] + p.motion * t_total)) + 4
    ch, cw = h + 2 * margin, w + 2 * margin

    bg_tex = _smooth_texture(rng, ch, cw, p.texture_cells)
    fg_tex = _smooth_texture(rng, ch, cw, p.texture_cells + 2)
    fg_alpha = np.zeros((ch, cw, 1))
    fh = int(h * rng.uniform(*p.foreground_extent))
    fw = int(w * rng.uniform(*p.foreground_extent))
    fy = margin + rng.integers(0, max(h - fh, 1))
    fx = margin + rng.integers(0, max(w - fw, 1))
    fg_alpha[fy: fy + fh, fx: fx + fw] = 1.0

    d_bg = rng.uniform(*p.background_disparity)
    d_fg = rng.uniform(*p.foreground_disparity)
    vel = {
        "bg": rng.uniform(-p.motion, p.motion, size=2),
        "fg": rng.uniform(-p.motion, p.motion, size=2),
    }

    clip = {v: np.empty((t_total, 3, h, w), dtype=np.float32) for v in VIEWS}
    for t in range(t_total):
        for view, disp_sign in (("L", 0.0), ("R", 1.0)):
            bg_ox = margin + vel["bg"][1] * t + disp_sign * d_bg
            bg_oy = margin + vel["bg"][0] * t
            fg_ox = margin + vel["fg"][1] * t + disp_sign * d_fg
            fg_oy = margin + vel["fg"][0] * t
            bg = _sample(bg_tex, bg_oy, bg_ox, h, w)
            fg = _sample(fg_tex, fg_oy, fg_ox, h, w)
            alpha = _sample(fg_alpha, fg_oy, fg_ox, h, w)
            frame = alpha * fg + (1.0 - alpha) * bg
            if p.view_noise > 0:
                frame = frame + rng.normal(0.0, p.view_noise, frame.shape)
            frame = np.clip(frame, 0.0, 1.0).astype(np.float32)
            clip[view][t] = frame.transpose(2, 0, 1)
    return {v: torch.from_numpy(clip[v]) for v in VIEWS}


def clip_batch(rng: np.random.Generator, batch_size: int,
               params: SceneParams | None = None) -> dict:
    """Stack ``batch_size`` clips: ``{view: [B, T, 3, H, W]}``."""
    clips = [generate_clip(rng, params) for _ in range(batch_size)]
    return {v: torch.stack([c[v] for c in clips]) for v in VIEWS}


_VIEW_FILES = {"L": "left", "R": "right"}
_NAME_RE = re.compile(r"^(left|right)_(\d{4})\.png$")


def save_frames(directory, clip: dict) -> None:
    """Write a clip as 8-bit PNG pairs into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for view in VIEWS:
        frames = clip[view]
        for t in range(frames.shape[0]):
            arr = frames[t].numpy().transpose(1, 2, 0)
            img = np.clip(np.round(arr * 255.0), 0, 255).astype(np.uint8)
            Image.fromarray(img).save(directory / f"{_VIEW_FILES[view]}_{t:04d}.png")


def load_frames(directory) -> dict:
    """Read a clip written by :func:`save_frames` (or matching the naming)."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ValueError(f"not a directory: {directory}")
    found = {"left": {}, "right": {}}
    for path in directory.iterdir():
        m = _NAME_RE.match(path.name)
        if m:
            found[m.group(1)][int(m.group(2))] = path
    count = len(found["left"])
    if count == 0:
        raise ValueError(f"no left_NNNN.png/right_NNNN.png frames in {directory}")
    if len(found["right"]) != count:
        raise ValueError("left and right frame counts differ")
    clip = {}
    for view, key in _VIEW_FILES.items():
        frames = []
        for t in range(count):
            if t not in found[key]:
                raise ValueError(f"missing frame {key}_{t:04d}.png")
            arr = np.asarray(Image.open(found[key][t]).convert("RGB"), dtype=np.float32)
            frames.append(torch.from_numpy(arr.transpose(2, 0, 1)) / 255.0)
        clip[view] = torch.stack(frames)
    return clip

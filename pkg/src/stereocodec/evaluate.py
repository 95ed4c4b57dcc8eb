"""Rate-distortion evaluation tools.

Conventions:

* PSNR is computed over RGB with an 8-bit peak (255); identical inputs give
  ``inf``.
* Bits per pixel normalizes the whole container by ``2 * H * W`` per frame
  pair: both views' pixels count.
* BD-rate integrates the log-rate difference between two rate-distortion
  curves over their common quality interval (monotone piecewise-cubic
  interpolation by default, cubic polynomial fit as an alternative) and
  reports it as a percentage; negative means the test codec spends less
  rate than the anchor at equal quality.
* YUV 4:2:0 input is converted to RGB with BT.709 limited-range
  coefficients and co-sited (top-left) bilinear chroma upsampling.
"""

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

# BT.709 luma coefficients.
_KR = 0.2126
_KB = 0.0722
_KG = 1.0 - _KR - _KB


def psnr_rgb(reference: np.ndarray, test: np.ndarray, peak: float = 255.0) -> float:
    """PSNR in dB between two same-shape RGB arrays, 8-bit peak by default."""
    ref = np.asarray(reference, dtype=np.float64)
    tst = np.asarray(test, dtype=np.float64)
    if ref.shape != tst.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {tst.shape}")
    mse = float(np.mean((ref - tst) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def psnr_from_mse(mse: float, peak: float = 255.0) -> float:
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def bits_per_pixel(total_bits: float, width: int, height: int,
                   frame_pairs: int) -> float:
    """Container bits normalized by both views' pixels across the clip."""
    if width <= 0 or height <= 0 or frame_pairs <= 0:
        raise ValueError("dimensions and frame count must be positive")
    return total_bits / (2.0 * width * height * frame_pairs)


def _curve(points) -> tuple[np.ndarray, np.ndarray]:
    pts = sorted((float(q), float(r)) for r, q in points)
    quality = np.array([q for q, _ in pts])
    rate = np.array([r for _, r in pts])
    if len(pts) < 2:
        raise ValueError("a rate-distortion curve needs at least two points")
    if np.any(np.diff(quality) <= 0):
        raise ValueError("curve quality values must be strictly increasing")
    if np.any(rate <= 0):
        raise ValueError("rates must be positive")
    return quality, np.log10(rate)


def bd_rate(anchor_points, test_points, mode: str = "pchip") -> float:
    """Average rate difference of ``test`` against ``anchor``, in percent.

    Points are ``(rate, quality)`` pairs, e.g. ``(bpp, psnr)``.  The log
    rates are interpolated as functions of quality and averaged over the
    overlapping quality interval.
    """
    q_a, r_a = _curve(anchor_points)
    q_t, r_t = _curve(test_points)
    lo = max(q_a.min(), q_t.min())
    hi = min(q_a.max(), q_t.max())
    if hi <= lo:
        raise ValueError("curves share no quality interval")

    def integral(q, r):
        if mode == "pchip":
            anti = PchipInterpolator(q, r).antiderivative()
            return float(anti(hi) - anti(lo))
        if mode == "poly":
            coeffs = np.polyfit(q, r, 3)
            anti = np.polyint(coeffs)
            return float(np.polyval(anti, hi) - np.polyval(anti, lo))
        raise ValueError(f"unknown interpolation mode {mode!r}")

    avg_log_diff = (integral(q_t, r_t) - integral(q_a, r_a)) / (hi - lo)
    return (10.0 ** avg_log_diff - 1.0) * 100.0


# -- color conversion ---------------------------------------------------------


def _upsample_chroma(plane: np.ndarray) -> np.ndarray:
    """2x bilinear upsampling with chroma co-sited on the top-left luma."""
    h, w = plane.shape
    p = plane.astype(np.float64)
    rows = np.empty((2 * h, w), dtype=np.float64)
    rows[0::2] = p
    rows[1:-1:2] = 0.5 * (p[:-1] + p[1:])
    rows[-1] = p[-1]
    out = np.empty((2 * h, 2 * w), dtype=np.float64)
    out[:, 0::2] = rows
    out[:, 1:-1:2] = 0.5 * (rows[:, :-1] + rows[:, 1:])
    out[:, -1] = rows[:, -1]
    return out


def yuv420_to_rgb_bt709(y: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Limited-range BT.709 YUV 4:2:0 planes to an 8-bit RGB image."""
    y = np.asarray(y)
    if y.shape[0] != 2 * u.shape[0] or y.shape[1] != 2 * u.shape[1]:
        raise ValueError("chroma planes must be half the luma size")
    if u.shape != v.shape:
        raise ValueError("u and v planes must match")
    yf = (y.astype(np.float64) - 16.0) / 219.0
    cb = (_upsample_chroma(u) - 128.0) / 224.0
    cr = (_upsample_chroma(v) - 128.0) / 224.0
    r = yf + 2.0 * (1.0 - _KR) * cr
    b = yf + 2.0 * (1.0 - _KB) * cb
    g = (yf - _KR * r - _KB * b) / _KG
    rgb = np.stack([r, g, b], axis=-1)
    return np.clip(np.round(rgb * 255.0), 0.0, 255.0).astype(np.uint8)


def read_yuv420(path, width: int, height: int, count: int | None = None):
    """Iterate 8-bit RGB frames from a planar YUV 4:2:0 file."""
    frame_bytes = width * height * 3 // 2
    with open(path, "rb") as fh:
        index = 0
        while count is None or index < count:
            raw = fh.read(frame_bytes)
            if len(raw) < frame_bytes:
                break
            y = np.frombuffer(raw, dtype=np.uint8, count=width * height)
            y = y.reshape(height, width)
            off = width * height
            u = np.frombuffer(raw, dtype=np.uint8, count=off // 4, offset=off)
            u = u.reshape(height // 2, width // 2)
            v = np.frombuffer(raw, dtype=np.uint8, count=off // 4, offset=off + off // 4)
            v = v.reshape(height // 2, width // 2)
            yield yuv420_to_rgb_bt709(y, u, v)
            index += 1


# -- dataset presets -----------------------------------------------------------


@dataclass
class DatasetPreset:
    """Crop and GOP conventions for a named benchmark dataset."""

    name: str
    gop_size: int
    crop_top: int = 0
    crop_bottom: int = 0
    crop_left: int = 0
    crop_right: int = 0
    target_hw: tuple[int, int] | None = None
    frame_limit: int | None = None

    def crop(self, image: np.ndarray) -> np.ndarray:
        """Crop an ``[H, W, C]`` (or ``[H, W]``) image to the preset window."""
        h, w = image.shape[0], image.shape[1]
        top, left = self.crop_top, self.crop_left
        bottom, right = h - self.crop_bottom, w - self.crop_right
        if self.target_hw is not None:
            # anchor the window at the bottom-right corner
            top = h - self.target_hw[0]
            left = w - self.target_hw[1]
            bottom, right = h, w
        if top < 0 or left < 0 or bottom > h or right > w or top >= bottom or left >= right:
            raise ValueError(f"image {h}x{w} too small for preset {self.name}")
        return image[top:bottom, left:right]


DATASET_PRESETS = {
    "cityscapes": DatasetPreset("cityscapes", gop_size=30, crop_top=64,
                                crop_bottom=256, crop_left=128),
    "kitti": DatasetPreset("kitti", gop_size=21, target_hw=(320, 1216)),
    "nagoya": DatasetPreset("nagoya", gop_size=32, frame_limit=96),
}


def crop_dataset(frames: np.ndarray, dataset: str) -> np.ndarray:
    """Apply a dataset preset crop to ``[H, W, C]`` or ``[T, H, W, C]``."""
    preset = DATASET_PRESETS.get(dataset)
    if preset is None:
        raise ValueError(f"unknown dataset {dataset!r}; "
                         f"known: {sorted(DATASET_PRESETS)}")
    if frames.ndim == 4:
        return np.stack([preset.crop(f) for f in frames])
    return preset.crop(frames)


# -- reporting ------------------------------------------------------------------


def emit_report(out_dir, rows: list[dict], anchor_label: str = "full") -> dict:
    """Write rate-distortion CSVs, a BD-rate table, and a curve plot.

    ``rows`` are dicts with keys ``label``, ``sequence``, ``lambda``,
    ``bpp`` and ``psnr``.  Returns the BD-rate table as a nested dict
    ``{label: {sequence: percent}}``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels = sorted({row["label"] for row in rows})
    sequences = sorted({row["sequence"] for row in rows})
    if anchor_label not in labels:
        raise ValueError(
            f"anchor label {anchor_label!r} not present in rows "
            f"(labels: {', '.join(labels) or 'none'})"
        )

    for label in labels:
        with open(out_dir / f"rd_{label}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sequence", "lambda", "bpp", "psnr"])
            for row in rows:
                if row["label"] == label:
                    writer.writerow([row["sequence"], row["lambda"],
                                     f"{row['bpp']:.6f}", f"{row['psnr']:.4f}"])

    def curve_of(label, sequence):
        pts = [(row["bpp"], row["psnr"]) for row in rows
               if row["label"] == label and row["sequence"] == sequence]
        return pts

    table: dict = {}
    for label in labels:
        if label == anchor_label:
            continue
        table[label] = {}
        for sequence in sequences:
            anchor = curve_of(anchor_label, sequence)
            test = curve_of(label, sequence)
            if len(anchor) >= 2 and len(test) >= 2:
                try:
                    table[label][sequence] = bd_rate(anchor, test)
                except ValueError:
                    # Degenerate curves (repeated or disjoint qualities)
                    # get no BD entry; the raw CSVs still carry the points.
                    continue

    with open(out_dir / "bd_rate.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "sequence", f"bd_rate_vs_{anchor_label}_percent"])
        for label, per_seq in table.items():
            for sequence, value in per_seq.items():
                writer.writerow([label, sequence, f"{value:.4f}"])

    _plot_curves(out_dir / "rd_curves.png", rows, labels, sequences)
    return table


def _plot_curves(path, rows, labels, sequences) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, max(len(sequences), 1),
                             figsize=(5 * max(len(sequences), 1), 4),
                             squeeze=False)
    for ax, sequence in zip(axes[0], sequences):
        for label in labels:
            pts = sorted((row["bpp"], row["psnr"]) for row in rows
                         if row["label"] == label and row["sequence"] == sequence)
            if pts:
                ax.plot([p[0] for p in pts], [p[1] for p in pts],
                        marker="o", label=label)
        ax.set_title(sequence)
        ax.set_xlabel("bits per pixel")
        ax.set_ylabel("PSNR (dB)")
        ax.grid(True, alpha=0.3)
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

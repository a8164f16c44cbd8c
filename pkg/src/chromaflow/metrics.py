"""Evaluation harness: PSNR, colorfulness, and temporal color consistency.

PSNR is the standard 8-bit reference metric over all RGB samples.
Colorfulness follows Hasler and Suesstrunk: opponent channels rg = R - G
and yb = (R + G)/2 - B, combined as sqrt(var) plus 0.3 times the mean
magnitude. CDC (color distribution consistency) averages the
Jensen-Shannon divergence between per-channel 256-bin histograms of frame
pairs at temporal steps 1, 2 and 4; lower means steadier color.

Both no-reference scores are also reported as ratios to the ground-truth
video's scores, where a ratio near 1 means the result matches the
original footage's vibrancy and stability.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .colorspace import Rgb8Image

PSNR_CAP_DB = 99.0
CDC_STEPS = (1, 2, 4)
CDC_BINS = 256
MIN_CDC_FRAMES = 5


def psnr(result: Rgb8Image, reference: Rgb8Image) -> float:
    """Peak signal-to-noise ratio in dB over all RGB samples.

    Identical images report the 99 dB cap rather than infinity so video
    averages and ratios stay finite.
    """
    if result.data.shape != reference.data.shape:
        raise ValueError(
            f"dimension mismatch: {result.data.shape} vs {reference.data.shape}"
        )
    diff = result.data.astype(np.float64) - reference.data.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(255.0**2 / mse))


def colorfulness(img: Rgb8Image) -> float:
    """Hasler-Suesstrunk colorfulness score (0 for any gray image)."""
    rgb = img.data.astype(np.float64)
    rg = rgb[..., 0] - rgb[..., 1]
    yb = 0.5 * (rgb[..., 0] + rgb[..., 1]) - rgb[..., 2]
    sigma = math.sqrt(float(np.var(rg)) + float(np.var(yb)))
    mu = math.sqrt(float(np.mean(rg)) ** 2 + float(np.mean(yb)) ** 2)
    return sigma + 0.3 * mu


def video_colorfulness(frames: Sequence[Rgb8Image]) -> float:
    """Arithmetic mean of per-frame colorfulness."""
    if not frames:
        raise ValueError("empty frame sequence")
    return float(np.mean([colorfulness(f) for f in frames]))


def _channel_histogram(channel: np.ndarray, bins: int) -> np.ndarray:
    hist = np.bincount(channel.reshape(-1), minlength=bins).astype(np.float64)
    return hist / hist.sum()


def js_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """Jensen-Shannon divergence (natural log) between two histograms.

    Bounded by ln 2; zero iff the histograms are identical.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    m = 0.5 * (p + q)

    def kl(a, b):
        nz = a > 0.0
        return float(np.sum(a[nz] * np.log(a[nz] / b[nz])))

    return 0.5 * kl(p, m) + 0.5 * kl(q, m)


def cdc(frames: Sequence[Rgb8Image], steps: Sequence[int] = CDC_STEPS, bins: int = CDC_BINS) -> float:
    """Color distribution consistency of a frame sequence.

    For each temporal step s, the mean over frame pairs (t, t+s) of the
    per-RGB-channel mean JS divergence between 256-bin histograms;
    averaged over the steps. Requires enough frames for the largest step
    to form at least one pair.
    """
    if len(frames) < MIN_CDC_FRAMES:
        raise ValueError(f"cdc needs at least {MIN_CDC_FRAMES} frames, got {len(frames)}")
    hists = [
        [_channel_histogram(f.data[..., c], bins) for c in range(3)] for f in frames
    ]
    step_means = []
    for s in steps:
        pair_scores = []
        for t in range(len(frames) - s):
            per_channel = [js_divergence(hists[t][c], hists[t + s][c]) for c in range(3)]
            pair_scores.append(np.mean(per_channel))
        step_means.append(np.mean(pair_scores))
    return float(np.mean(step_means))


@dataclass
class MetricsReport:
    """Per-video evaluation results.

    Ratios are None when the ground-truth denominator is zero
    (reported as unavailable, never as infinity).
    """

    psnr_db: float
    colorfulness: float
    cdc: float
    colorfulness_ratio: float | None = None
    cdc_ratio: float | None = None
    true_colorfulness: float | None = None
    true_cdc: float | None = None
    per_frame: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "psnr_db": self.psnr_db,
            "colorfulness": self.colorfulness,
            "colorfulness_ratio": self.colorfulness_ratio,
            "cdc": self.cdc,
            "cdc_ratio": self.cdc_ratio,
            "true_colorfulness": self.true_colorfulness,
            "true_cdc": self.true_cdc,
            "per_frame": self.per_frame,
        }

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def save_csv(self, path) -> None:
        """One summary row per video; unavailable ratios stay empty."""
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["psnr", "colorfulness", "colorfulness_ratio", "cdc", "cdc_ratio"])
            writer.writerow(
                [
                    f"{self.psnr_db:.4f}",
                    f"{self.colorfulness:.4f}",
                    "" if self.colorfulness_ratio is None else f"{self.colorfulness_ratio:.4f}",
                    f"{self.cdc:.6f}",
                    "" if self.cdc_ratio is None else f"{self.cdc_ratio:.4f}",
                ]
            )


def evaluate(
    result_frames: Sequence[Rgb8Image], gt_frames: Sequence[Rgb8Image]
) -> MetricsReport:
    """Score a colorized video against its ground truth.

    Mean per-frame PSNR plus the colorfulness and CDC ratios of result to
    ground truth.
    """
    if len(result_frames) != len(gt_frames):
        raise ValueError(
            f"length mismatch: {len(result_frames)} result vs {len(gt_frames)} gt frames"
        )
    if len(result_frames) < MIN_CDC_FRAMES:
        raise ValueError(f"evaluate needs at least {MIN_CDC_FRAMES} frames")
    for i, (r, g) in enumerate(zip(result_frames, gt_frames)):
        if r.data.shape != g.data.shape:
            raise ValueError(f"frame {i}: dimension mismatch")

    per_frame = []
    for i, (r, g) in enumerate(zip(result_frames, gt_frames)):
        per_frame.append(
            {"frame": i, "psnr_db": psnr(r, g), "colorfulness": colorfulness(r)}
        )
    mean_psnr = float(np.mean([rec["psnr_db"] for rec in per_frame]))
    cf = video_colorfulness(result_frames)
    true_cf = video_colorfulness(gt_frames)
    result_cdc = cdc(result_frames)
    true_cdc = cdc(gt_frames)
    return MetricsReport(
        psnr_db=mean_psnr,
        colorfulness=cf,
        cdc=result_cdc,
        colorfulness_ratio=None if true_cf == 0.0 else cf / true_cf,
        cdc_ratio=None if true_cdc == 0.0 else result_cdc / true_cdc,
        true_colorfulness=true_cf,
        true_cdc=true_cdc,
        per_frame=per_frame,
    )

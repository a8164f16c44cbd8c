"""Shared synthetic-footage builders for the test suite."""

from pathlib import Path

import numpy as np
import pytest
from PIL import Image
from scipy.ndimage import gaussian_filter

from chromaflow import (
    LabFrame,
    LumaPlane,
    Rgb8Image,
    gray_to_luma,
    lab_to_rgb,
    luma_to_gray,
    rgb_to_lab,
)
from chromaflow.frameio import quantize_chroma, write_rgb


def smooth_texture(height, width, seed=7, lo=10.0, hi=90.0):
    """Smooth random lightness texture; rich gradients but LK-friendly."""
    rng = np.random.default_rng(seed)
    t = gaussian_filter(rng.uniform(0.0, 1.0, (height, width)), 2.0)
    t = (t - t.min()) / (t.max() - t.min())
    return lo + t * (hi - lo)


def shifted_pair(dx, dy, size=64, seed=7):
    """Wrap-free global translation pair.

    target(x, y) = source(x - dx, y - dy), so the true backward flow is
    (u, v) = (-dx, -dy). Both crops come from one larger texture.
    """
    pad = 12
    big = smooth_texture(size + 2 * pad, size + 2 * pad, seed=seed)
    src = big[pad : pad + size, pad : pad + size]
    tgt = big[pad - dy : pad - dy + size, pad - dx : pad - dx + size]
    return LumaPlane(tgt), LumaPlane(src)


def stable_gray_levels(levels, chroma_a, chroma_b):
    """Filter gray levels to exact fixed points of the pipeline color chain.

    A level g with uniform chroma (a, b) is usable when the full round
    trip color -> LAB -> (gray-quantized L, grid-snapped chroma) -> color
    reproduces the color exactly; on such levels an oracle-driven static
    run must match ground truth bit for bit. In practice nearly every
    level qualifies.
    """
    g = np.asarray(levels, np.uint8).reshape(1, -1)
    luma = gray_to_luma(g)
    color = lab_to_rgb(
        LabFrame(luma.L, np.full_like(luma.L, chroma_a), np.full_like(luma.L, chroma_b))
    )
    lab = rgb_to_lab(color)
    gray_again = luma_to_gray(LumaPlane(lab.L))
    a, b = quantize_chroma(lab.A, lab.B)
    color_again = lab_to_rgb(LabFrame(gray_to_luma(gray_again).L, a, b))
    ok = np.all(color_again.data == color.data, axis=2)[0] & (gray_again == g)[0]
    kept = [int(lv) for lv, o in zip(levels, ok) if o]
    colors = color.data[0][ok]
    return kept, colors


def static_scene(levels, colors, shape, seed):
    """Textured gray frame plus its uniform-chroma color version."""
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(levels), shape)
    gray = np.asarray(levels, np.uint8)[idx]
    return gray, colors[idx]


def write_gray(gray, path):
    Image.fromarray(np.asarray(gray, np.uint8), mode="L").save(path, format="PNG")


def write_sequence(directory, gray_frames, gt_frames=None, gt_dir=None):
    """Write a numbered gray input sequence (and optionally its gt colors)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for t, gray in enumerate(gray_frames):
        write_gray(gray, directory / f"{t:05d}.png")
    if gt_frames is not None:
        gt_dir = Path(gt_dir)
        gt_dir.mkdir(parents=True, exist_ok=True)
        for t, gt in enumerate(gt_frames):
            write_rgb(Rgb8Image(gt), gt_dir / f"{t:05d}.png")


@pytest.fixture
def two_scene_video(tmp_path):
    """30-frame static two-scene video: gray inputs, bit-exact gt colors.

    Zero motion within each scene, one hard cut at frame 15, disjoint
    lightness ranges so default detection finds exactly that cut.
    """
    lev1, col1 = stable_gray_levels(range(40, 111), 25.0, -18.0)
    lev2, col2 = stable_gray_levels(range(150, 221), -20.0, 30.0)
    assert len(lev1) >= 32 and len(lev2) >= 32
    g1, gt1 = static_scene(lev1, col1, (64, 64), seed=3)
    g2, gt2 = static_scene(lev2, col2, (64, 64), seed=4)
    grays = [g1] * 15 + [g2] * 15
    gts = [gt1] * 15 + [gt2] * 15
    write_sequence(tmp_path / "in", grays, gts, tmp_path / "gt")
    return {
        "input_dir": tmp_path / "in",
        "gt_dir": tmp_path / "gt",
        "cut": 15,
        "n_frames": 30,
        "gt_frames": gts,
        "gray_frames": grays,
    }

"""PNG frame I/O.

Frames travel as 8-bit PNGs: RGB for color output and ground truth,
single-channel gray for the grayscale input sequence. Label maps (instance
masks) and the two-plane chroma interchange files of the external-colorizer
protocol are 16-bit grayscale PNGs.

A chroma interchange ("ab") file stores the A plane stacked above the B
plane in one width x (2*height) 16-bit gray PNG; sample value v maps to
chroma (v / 65535) * 255 - 128. Integer chroma values are exact on this
grid (65535 = 255 * 257).
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image

from .colorspace import (
    LumaPlane,
    Rgb8Image,
    gray_to_luma,
    luma_to_gray,
    luminance_of,
)

AB_SCALE = 65535.0 / 255.0  # sample steps per chroma unit


class FrameFormatError(Exception):
    """A frame file is missing, malformed, or has unexpected geometry."""


def read_rgb(path) -> Rgb8Image:
    """Read an 8-bit PNG as RGB, expanding gray/palette images."""
    with Image.open(path) as im:
        return Rgb8Image(np.asarray(im.convert("RGB")))


def write_rgb(img: Rgb8Image, path) -> None:
    Image.fromarray(img.data, mode="RGB").save(path, format="PNG")


def read_luma(path) -> LumaPlane:
    """Read a PNG as a lightness plane.

    Single-channel gray files go through the sRGB gray path; color files
    are converted and their L plane taken.
    """
    with Image.open(path) as im:
        if im.mode in ("L", "1", "I;16", "I"):
            gray = np.asarray(im.convert("L"))
            return gray_to_luma(gray)
        rgb = Rgb8Image(np.asarray(im.convert("RGB")))
    return luminance_of(rgb)


def write_luma(luma: LumaPlane, path) -> None:
    """Write a lightness plane as an 8-bit gray PNG."""
    Image.fromarray(luma_to_gray(luma), mode="L").save(path, format="PNG")


def read_labels(path) -> np.ndarray:
    """Read an instance label map (16-bit gray PNG; 0 = background)."""
    with Image.open(path) as im:
        arr = np.asarray(im)
    if arr.ndim != 2:
        raise FrameFormatError(f"{path}: label map must be single-channel")
    return arr.astype(np.uint16)


def write_labels(labels: np.ndarray, path) -> None:
    labels = np.asarray(labels, dtype=np.uint16)
    Image.fromarray(labels).save(path, format="PNG")


def chroma_to_ab_samples(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Quantize A/B planes to the stacked 16-bit interchange layout."""
    stacked = np.concatenate([a, b], axis=0)
    v = np.rint((np.clip(stacked, -128.0, 127.0) + 128.0) * AB_SCALE)
    return v.astype(np.uint16)


def ab_samples_to_chroma(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decode stacked 16-bit samples back to float A/B planes."""
    if samples.shape[0] % 2 != 0:
        raise FrameFormatError(
            f"ab data height {samples.shape[0]} is odd; expected stacked A over B"
        )
    chroma = samples.astype(np.float64) / AB_SCALE - 128.0
    h = samples.shape[0] // 2
    return chroma[:h], chroma[h:]


def write_ab(a: np.ndarray, b: np.ndarray, path) -> None:
    """Write A/B chroma planes as one stacked 16-bit gray PNG."""
    Image.fromarray(chroma_to_ab_samples(a, b)).save(path, format="PNG")


def read_ab(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a stacked 16-bit chroma PNG back into float A/B planes."""
    with Image.open(path) as im:
        arr = np.asarray(im)
    if arr.ndim != 2:
        raise FrameFormatError(f"{path}: ab file must be single-channel")
    return ab_samples_to_chroma(arr.astype(np.uint16))


def quantize_chroma(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Snap chroma planes to the 16-bit interchange grid.

    The pipeline applies this to every colorizer response so in-process
    providers and file-based external providers see the same chroma
    resolution (one part in 257 of a chroma unit; integer chroma is exact).
    """
    return ab_samples_to_chroma(chroma_to_ab_samples(a, b))


_FRAME_NAME = re.compile(r"^(\d+)\.png$", re.IGNORECASE)


def list_frames(directory) -> list[Path]:
    """List the PNG frames of a sequence directory in temporal order.

    Frame files are zero-padded decimal indices, the usual layout of
    frame-extracted footage; indices must be contiguous so a missing
    frame is caught here rather than surfacing as a temporal glitch
    downstream.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FrameFormatError(f"frame directory not found: {directory}")
    entries = []
    for p in sorted(directory.iterdir()):
        m = _FRAME_NAME.match(p.name)
        if m:
            entries.append((int(m.group(1)), p))
    if not entries:
        raise FrameFormatError(f"no numbered .png frames in {directory}")
    entries.sort(key=lambda e: e[0])
    first = entries[0][0]
    for offset, (idx, p) in enumerate(entries):
        if idx != first + offset:
            raise FrameFormatError(
                f"frame indices not contiguous near {p.name}: expected {first + offset}"
            )
    return [p for _, p in entries]

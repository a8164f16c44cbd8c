"""Scene cut detection on the grayscale stream.

Hard cuts are found by comparing normalized luminance histograms of
consecutive frames; the pipeline skips warping at a cut so colors never
propagate across unrelated scenes. Gradual transitions (dissolves, fades)
are not detected and simply degrade to ordinary warp-plus-correction
behavior. Externally authored cut lists can override detection via a
JSON array of frame indices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .colorspace import LumaPlane


@dataclass
class SceneParams:
    """Histogram differencing configuration.

    change_threshold is an L1 distance between normalized histograms, so
    it lives in [0, 2]; 2 means fully disjoint distributions.
    """

    histogram_bins: int = 64
    change_threshold: float = 0.5

    def __post_init__(self):
        if self.histogram_bins < 2:
            raise ValueError("histogram_bins must be >= 2")
        if not 0.0 < self.change_threshold <= 2.0:
            raise ValueError("change_threshold must be in (0, 2]")


def _luma_histogram(plane: LumaPlane, bins: int) -> np.ndarray:
    hist, _ = np.histogram(plane.L, bins=bins, range=(0.0, 100.0))
    total = hist.sum()
    if total == 0:
        return np.zeros(bins)
    return hist / total


def is_scene_change(prev: LumaPlane, curr: LumaPlane, params: SceneParams | None = None) -> bool:
    """Decide whether curr starts a new scene relative to prev.

    True iff the L1 distance between the two frames' normalized luminance
    histograms exceeds the change threshold. Symmetric in its arguments.
    """
    if params is None:
        params = SceneParams()
    if prev.L.shape != curr.L.shape:
        raise ValueError(
            f"dimension mismatch: prev {prev.L.shape} vs curr {curr.L.shape}"
        )
    h_prev = _luma_histogram(prev, params.histogram_bins)
    h_curr = _luma_histogram(curr, params.histogram_bins)
    return float(np.abs(h_prev - h_curr).sum()) > params.change_threshold


def detect_cuts(frames: Sequence[LumaPlane], params: SceneParams | None = None) -> list[int]:
    """Return the indices of frames that start a new scene (frame 0 excluded)."""
    cuts = []
    for t in range(1, len(frames)):
        if is_scene_change(frames[t - 1], frames[t], params):
            cuts.append(t)
    return cuts


def save_cuts(cuts: Sequence[int], path) -> None:
    """Write a cut list as a JSON array of frame indices."""
    Path(path).write_text(json.dumps(sorted(int(c) for c in cuts)) + "\n")


def load_cuts(path) -> list[int]:
    """Read a JSON cut list, validating it is an array of nonnegative ints."""
    data = json.loads(Path(path).read_text())
    if not isinstance(data, list) or not all(
        isinstance(c, int) and not isinstance(c, bool) and c >= 0 for c in data
    ):
        raise ValueError(f"{path}: cut list must be a JSON array of nonnegative integers")
    return sorted(set(data))

"""Backward warping of chrominance between consecutive frames.

Each target pixel pulls its color from the previous final frame at the
flow-displaced location, by bilinear interpolation. Lightness is never
warped; the current frame keeps its own input luminance. Samples whose
source location falls outside the frame are marked invalid and carry
zero chroma; the correction stage is guaranteed to repaint them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .colorspace import LabFrame, LumaPlane


@dataclass
class WarpedChroma:
    """Warped A/B planes plus the in-bounds validity mask (1 = valid)."""

    A: np.ndarray
    B: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=np.float64)
        self.B = np.asarray(self.B, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=np.uint8)
        if not (self.A.shape == self.B.shape == self.valid.shape):
            raise ValueError("warped plane shapes differ")


def warp_chroma(prev_final, flow) -> WarpedChroma:
    """Pull previous-frame chroma onto the current grid along backward flow.

    For each pixel (x, y), the source location is (x + u, y + v). In-bounds
    locations are sampled bilinearly from prev_final's A and B planes;
    out-of-bounds pixels get valid=0 and A=B=0. Zero flow reproduces the
    input chroma bit-exactly.
    """
    u = flow.u.astype(np.float64)
    v = flow.v.astype(np.float64)
    h, w = prev_final.L.shape
    if u.shape != (h, w):
        raise ValueError(f"dimension mismatch: frame {(h, w)} vs flow {u.shape}")

    yy, xx = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    px = xx + u
    py = yy + v
    valid = (px >= 0.0) & (px <= w - 1.0) & (py >= 0.0) & (py <= h - 1.0)

    cx = np.clip(px, 0.0, w - 1.0)
    cy = np.clip(py, 0.0, h - 1.0)
    x0 = np.floor(cx).astype(np.intp)
    y0 = np.floor(cy).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = cx - x0
    fy = cy - y0

    w00 = (1.0 - fx) * (1.0 - fy)
    w01 = fx * (1.0 - fy)
    w10 = (1.0 - fx) * fy
    w11 = fx * fy

    out = []
    for plane in (prev_final.A, prev_final.B):
        sampled = (
            plane[y0, x0] * w00
            + plane[y0, x1] * w01
            + plane[y1, x0] * w10
            + plane[y1, x1] * w11
        )
        out.append(np.where(valid, sampled, 0.0))
    return WarpedChroma(out[0], out[1], valid.astype(np.uint8))


def assemble_warp_frame(luma: LumaPlane, chroma: WarpedChroma) -> LabFrame:
    """Combine the current input luminance with warped chroma.

    The L plane is the input luma, bit-identical; invalid pixels carry
    A=B=0 (the validity mask travels separately to the correction stage).
    """
    if luma.L.shape != chroma.A.shape:
        raise ValueError(
            f"dimension mismatch: luma {luma.L.shape} vs chroma {chroma.A.shape}"
        )
    return LabFrame(L=luma.L, A=chroma.A, B=chroma.B)

"""Detection and repair of warping-corrupted pixels.

A per-pixel PSNR compares the warped frame against the previous final
frame; pixels below the threshold, and pixels whose warp sample fell out
of bounds, are flagged for repair. The composite then keeps warped chroma
where the flag is clear and takes the per-frame colorizer's chroma where
it is set, so propagation supplies stability and the colorizer supplies
fresh color exactly where propagation failed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .colorspace import LabFrame

# Peak floor so near-gray frames (peak ~ 0) do not zero out the PSNR.
PEAK_FLOOR = 1.0


@dataclass
class CorrectionMask:
    """Binary repair mask: 1 = corrupted, take colorizer output."""

    mask: np.ndarray
    tau_db: float

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=np.uint8)
        if self.mask.ndim != 2:
            raise ValueError("mask must be a 2-d plane")
        self.tau_db = float(self.tau_db)
        if not np.isfinite(self.tau_db):
            raise ValueError("tau_db must be finite")

    @property
    def corrupted_fraction(self) -> float:
        return float(np.mean(self.mask))


def correction_mask(
    warped: LabFrame,
    validity: np.ndarray,
    prev_final: LabFrame,
    tau_db: float,
    channels: str = "chroma",
    fixed_peak: float | None = None,
) -> CorrectionMask:
    """Flag pixels whose warped color deviates too far from the previous frame.

    Per pixel, the distortion d is the Euclidean norm of the difference
    between warped and previous-frame values; the per-pixel PSNR is
    20*log10(P/d) where P is the per-frame peak absolute value of the
    previous frame over the compared channels (floored at 1.0). A pixel is
    corrupted when that PSNR falls below tau_db. d = 0 means infinite PSNR
    and is never corrupted. Pixels with validity 0 are corrupted
    unconditionally: an out-of-bounds warp sample is exactly the uncolored
    region this mechanism exists to repaint.

    Parameters
    ----------
    warped : LabFrame
      Warp result for the current frame (carries the current luminance).
    validity : ndarray
      In-bounds mask from the warp, 1 = valid sample.
    prev_final : LabFrame
      Previous final frame.
    tau_db : float
      PSNR threshold in decibels; the reference operating point is 25 dB.
    channels : {"chroma", "lab"}
      Channels entering the norm. The default compares A/B only: the two
      frames carry different luminances by construction, so a full-LAB
      norm would flag every moving pixel. "lab" is available for
      sensitivity experiments.
    fixed_peak : float, optional
      Use this peak instead of the per-frame maximum (reproducibility
      switch).
    """
    if warped.L.shape != prev_final.L.shape:
        raise ValueError(
            f"dimension mismatch: warped {warped.L.shape} vs prev {prev_final.L.shape}"
        )
    validity = np.asarray(validity)
    if validity.shape != warped.L.shape:
        raise ValueError("validity plane dimension mismatch")
    if channels == "chroma":
        diffs = (warped.A - prev_final.A, warped.B - prev_final.B)
        peak_planes = (prev_final.A, prev_final.B)
    elif channels == "lab":
        diffs = (
            warped.L - prev_final.L,
            warped.A - prev_final.A,
            warped.B - prev_final.B,
        )
        peak_planes = (prev_final.L, prev_final.A, prev_final.B)
    else:
        raise ValueError(f"unknown channel selection {channels!r}")

    d2 = np.zeros_like(warped.L)
    for diff in diffs:
        d2 += diff * diff
    d = np.sqrt(d2)

    if fixed_peak is not None:
        peak = float(fixed_peak)
    else:
        peak = max(float(np.abs(p).max()) for p in peak_planes)
    peak = max(peak, PEAK_FLOOR)

    psnr_px = np.full_like(d, np.inf)
    nz = d > 0.0
    psnr_px[nz] = 20.0 * np.log10(peak / d[nz])
    corrupted = psnr_px < tau_db
    corrupted |= validity == 0
    return CorrectionMask(mask=corrupted.astype(np.uint8), tau_db=tau_db)


def composite(warped: LabFrame, colorized: LabFrame, mask: CorrectionMask) -> LabFrame:
    """Select warped or colorized chroma per pixel according to the mask.

    The output chroma at each pixel is bit-identical to exactly one of the
    two inputs (binary selection, no blending); luminance is the shared
    input luminance, unchanged.
    """
    if warped.L.shape != colorized.L.shape or warped.L.shape != mask.mask.shape:
        raise ValueError("dimension mismatch between warped, colorized and mask")
    if not np.array_equal(warped.L, colorized.L):
        raise ValueError(
            "luminance planes differ; both composite inputs must carry the input luminance"
        )
    take = mask.mask.astype(bool)
    return LabFrame(
        L=warped.L,
        A=np.where(take, colorized.A, warped.A),
        B=np.where(take, colorized.B, warped.B),
    )

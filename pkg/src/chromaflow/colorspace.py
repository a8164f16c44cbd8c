"""CIE LAB color handling for 8-bit sRGB video frames.

All conversions assume sRGB primaries, the IEC 61966-2-1 transfer function
and the D65 reference white. Planes are kept as float64 so that repeated
warping and compositing do not accumulate quantization error; rounding to
8-bit happens only when a frame is exported back to RGB.

The inverse RGB matrix is computed numerically from the forward matrix
rather than taken from published (rounded) tables, which keeps the
LAB -> RGB -> LAB round trip exact to float precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Linear sRGB -> XYZ, D65, 2 degree observer.
_RGB_TO_XYZ = np.array(
    [
        [0.4124, 0.3576, 0.1805],
        [0.2126, 0.7152, 0.0722],
        [0.0193, 0.1192, 0.9505],
    ]
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)

# D65 reference white.
_WHITE = np.array([0.95047, 1.0, 1.08883])

# CIELAB spline knee, delta = 6/29.
_DELTA = 6.0 / 29.0


@dataclass
class Rgb8Image:
    """Interleaved 8-bit RGB image.

    Attributes
    ----------
    data : ndarray
      uint8 array of shape (height, width, 3), row-major R,G,B samples.
    """

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise ValueError(f"expected (H, W, 3) data, got shape {self.data.shape}")
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if self.data.dtype != np.uint8:
            raise ValueError(f"expected uint8 samples, got {self.data.dtype}")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass
class LabFrame:
    """Per-frame L, A, B planes with shared dimensions.

    L is lightness in [0, 100]; A and B are chrominance in [-128, 127].
    The L plane is the immutable input luminance and is never resampled
    by the propagation pipeline.
    """

    L: np.ndarray
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        self.L = np.asarray(self.L, dtype=np.float64)
        self.A = np.asarray(self.A, dtype=np.float64)
        self.B = np.asarray(self.B, dtype=np.float64)
        if not (self.L.shape == self.A.shape == self.B.shape):
            raise ValueError(
                f"plane shapes differ: L {self.L.shape}, A {self.A.shape}, B {self.B.shape}"
            )
        if self.L.ndim != 2:
            raise ValueError(f"expected 2-d planes, got {self.L.ndim}-d")

    @property
    def height(self) -> int:
        return self.L.shape[0]

    @property
    def width(self) -> int:
        return self.L.shape[1]

    def copy(self) -> "LabFrame":
        return LabFrame(self.L.copy(), self.A.copy(), self.B.copy())


@dataclass
class LumaPlane:
    """Single lightness plane in [0, 100], the grayscale pipeline input."""

    L: np.ndarray

    def __post_init__(self):
        self.L = np.asarray(self.L, dtype=np.float64)
        if self.L.ndim != 2:
            raise ValueError(f"expected 2-d plane, got {self.L.ndim}-d")

    @property
    def height(self) -> int:
        return self.L.shape[0]

    @property
    def width(self) -> int:
        return self.L.shape[1]


def _srgb_to_linear(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _linear_to_srgb(c: np.ndarray) -> np.ndarray:
    c = np.maximum(c, 0.0)
    return np.where(c <= 0.0031308, c * 12.92, 1.055 * c ** (1.0 / 2.4) - 0.055)


def _lab_f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA**3, np.cbrt(t), t / (3.0 * _DELTA * _DELTA) + 4.0 / 29.0)


def _lab_f_inv(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA, t**3, 3.0 * _DELTA * _DELTA * (t - 4.0 / 29.0))


def rgb_to_lab(img: Rgb8Image) -> LabFrame:
    """Convert an 8-bit sRGB image to a float CIELAB frame.

    Parameters
    ----------
    img : Rgb8Image
      Source image.

    Returns
    -------
    LabFrame
      Same dimensions; L in [0, 100], A/B within the signed 8-bit chroma
      range for any 8-bit input.
    """
    rgb = img.data.astype(np.float64) / 255.0
    lin = _srgb_to_linear(rgb)
    r, g, b = lin[..., 0], lin[..., 1], lin[..., 2]
    m = _RGB_TO_XYZ
    x = m[0, 0] * r + m[0, 1] * g + m[0, 2] * b
    y = m[1, 0] * r + m[1, 1] * g + m[1, 2] * b
    z = m[2, 0] * r + m[2, 1] * g + m[2, 2] * b
    fx = _lab_f(x / _WHITE[0])
    fy = _lab_f(y / _WHITE[1])
    fz = _lab_f(z / _WHITE[2])
    return LabFrame(
        L=116.0 * fy - 16.0,
        A=500.0 * (fx - fy),
        B=200.0 * (fy - fz),
    )


def lab_to_rgb(frame: LabFrame) -> Rgb8Image:
    """Convert a CIELAB frame back to 8-bit sRGB.

    Out-of-gamut values are clamped per channel after the inverse
    transform; no perceptual gamut mapping is attempted.
    """
    fy = (frame.L + 16.0) / 116.0
    fx = fy + frame.A / 500.0
    fz = fy - frame.B / 200.0
    x = _WHITE[0] * _lab_f_inv(fx)
    y = _WHITE[1] * _lab_f_inv(fy)
    z = _WHITE[2] * _lab_f_inv(fz)
    m = _XYZ_TO_RGB
    r = m[0, 0] * x + m[0, 1] * y + m[0, 2] * z
    g = m[1, 0] * x + m[1, 1] * y + m[1, 2] * z
    b = m[2, 0] * x + m[2, 1] * y + m[2, 2] * z
    lin = np.stack([r, g, b], axis=-1)
    srgb = _linear_to_srgb(lin) * 255.0
    out = np.rint(np.clip(srgb, 0.0, 255.0)).astype(np.uint8)
    return Rgb8Image(out)


def luminance_of(img: Rgb8Image) -> LumaPlane:
    """Extract the CIELAB lightness plane of an RGB image.

    Equals ``rgb_to_lab(img).L`` exactly; this is the ingest path used when
    a ground-truth color video stands in for a grayscale input sequence.
    """
    return LumaPlane(rgb_to_lab(img).L)


def _gray_lightness_table() -> np.ndarray:
    ramp = np.arange(256, dtype=np.uint8)
    gray = Rgb8Image(np.stack([ramp, ramp, ramp], axis=-1).reshape(1, 256, 3))
    return rgb_to_lab(gray).L.reshape(256)


# Lightness of each 8-bit gray level through the sRGB gray path; strictly
# increasing, used to ingest and export single-channel gray PNGs.
_GRAY_L = _gray_lightness_table()


def gray_to_luma(gray: np.ndarray) -> LumaPlane:
    """Ingest an 8-bit gray plane as lightness via the sRGB gray path."""
    gray = np.asarray(gray)
    if gray.dtype != np.uint8 or gray.ndim != 2:
        raise ValueError(f"expected 2-d uint8 gray plane, got {gray.dtype} {gray.shape}")
    return LumaPlane(_GRAY_L[gray])


def luma_to_gray(luma: LumaPlane) -> np.ndarray:
    """Export a lightness plane as the nearest 8-bit gray levels.

    Inverse of :func:`gray_to_luma` on exact gray lightness values, so
    gray round trips are lossless.
    """
    lv = np.clip(luma.L, 0.0, 100.0)
    hi = np.searchsorted(_GRAY_L, lv).clip(1, 255)
    lo = hi - 1
    pick_hi = (_GRAY_L[hi] - lv) <= (lv - _GRAY_L[lo])
    return np.where(pick_hi, hi, lo).astype(np.uint8)

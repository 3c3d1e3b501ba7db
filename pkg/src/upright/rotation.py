"""Image rotation with the package's sign convention, plus fill-free cropping.

Convention: a positive angle rotates the image content counter-clockwise as
displayed (top-left origin), and the label stored with a synthetic sample is
the rotation that was APPLIED to the upright source. Undoing a rotation
therefore means rotating by the negated (shortest-path) label. At exact
multiples of 90 degrees on square images the warp reduces to a pixel
permutation (verified against np.rot90 in the tests).
"""

from __future__ import annotations

import math

import cv2
import numpy as np


class DegenerateCropError(ValueError):
    """The fill-free crop for the requested angle is smaller than 16x16."""


def _folded_angle_rad(angle_deg: float) -> float:
    """Fold any angle to [0, 90] degrees (rotation geometry is 90-periodic
    up to axis swaps for the inscribed-rectangle computation)."""
    a = abs(angle_deg) % 180.0
    if a > 90.0:
        a = 180.0 - a
    return math.radians(a)


def fill_free_crop_scale(width: int, height: int, angle_deg: float) -> float:
    """Scale factor k such that a centered k*width x k*height rectangle is
    guaranteed free of fill pixels after rotating a width x height image by
    angle_deg about its center (same-size canvas)."""
    a = _folded_angle_rad(angle_deg)
    c, s = math.cos(a), math.sin(a)
    return min(width / (width * c + height * s), height / (width * s + height * c))


def fill_free_crop_box(height: int, width: int, angle_deg: float, margin: int = 2):
    """(y0, y1, x0, x1) of the largest centered crop with the original aspect
    ratio that contains no fill after rotation by angle_deg.

    ``margin`` shrinks the box a little further because bilinear sampling
    bleeds fill values about one pixel inside the exact geometric boundary.
    Raises DegenerateCropError when the box would fall below 16x16.
    """
    k = fill_free_crop_scale(width, height, angle_deg)
    cw = int(math.floor(width * k)) - 2 * margin
    ch = int(math.floor(height * k)) - 2 * margin
    if cw < 16 or ch < 16:
        raise DegenerateCropError(
            f"fill-free crop for angle {angle_deg:.2f} deg on {width}x{height} "
            f"image degenerates to {cw}x{ch} (minimum 16x16)"
        )
    x0 = (width - cw) // 2
    y0 = (height - ch) // 2
    return y0, y0 + ch, x0, x0 + cw


def rotate_image(img: np.ndarray, angle_deg: float, policy: str = "fill_black") -> np.ndarray:
    """Rotate counter-clockwise by angle_deg about the image center (bilinear).

    policy "fill_black" keeps the canvas size and pads uncovered corners with
    black; "center_crop" additionally crops to the largest fill-free centered
    rectangle of the original aspect ratio (DegenerateCropError below 16x16).
    """
    if not math.isfinite(angle_deg):
        raise ValueError(f"rotation angle must be finite, got {angle_deg!r}")
    if policy not in ("fill_black", "center_crop"):
        raise ValueError(f"unknown fill policy {policy!r}")
    h, w = img.shape[:2]
    center = ((w - 1) / 2.0, (h - 1) / 2.0)
    m = cv2.getRotationMatrix2D(center, float(angle_deg), 1.0)
    out = cv2.warpAffine(
        img, m, (w, h),
        flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT,
        borderValue=0,
    )
    if policy == "center_crop":
        y0, y1, x0, x1 = fill_free_crop_box(h, w, angle_deg)
        out = out[y0:y1, x0:x1].copy()
    return out

"""Procedurally generated upright imagery.

Every generator produces an image whose canonical orientation is visually
unambiguous: horizontal structure supplies the dominant line direction and a
top-bright / bottom-dark cue breaks the remaining 180-degree symmetry, so a
model can in principle recover the full rotation, not just the tilt.

The output is deliberately band-limited (a light Gaussian blur) so that
rotating by an angle and back loses very little; hard single-pixel edges
would otherwise dominate the interpolation error. Generation is driven by a
per-image rng stream seeded from (corpus seed, kind, index), which makes a
corpus reproducible independently of how the work is batched.
"""

from __future__ import annotations

import numpy as np
import cv2

CORPUS_KINDS = ("stripes", "text_blocks", "gradient_scene")

_KIND_CODE = {"stripes": 1, "text_blocks": 2, "gradient_scene": 3}

DEFAULT_IMAGE_SIZE = 128


def _finish(img: np.ndarray, blur_sigma: float = 1.1) -> np.ndarray:
    img = cv2.GaussianBlur(img, (0, 0), blur_sigma)
    return np.clip(img, 0, 255).astype(np.uint8)


def _vertical_ramp(h: int, w: int, top: float, bottom: float) -> np.ndarray:
    """Brightness multiplier column, bright at the top, dark at the bottom."""
    return np.linspace(top, bottom, h, dtype=np.float32)[:, None, None] * np.ones((1, w, 3), np.float32)


def make_stripes(rng: np.random.Generator, size: int = DEFAULT_IMAGE_SIZE) -> np.ndarray:
    """Horizontal stripes with randomized period, phase and colors; the
    vertical brightness ramp makes the bottom distinctly darker."""
    h = w = size
    period = float(rng.uniform(10, 24))
    phase = float(rng.uniform(0, period))
    lo = rng.uniform(20, 80, 3)
    hi = rng.uniform(160, 235, 3)
    y = np.arange(h, dtype=np.float32)
    stripe = ((y + phase) % period) < (period / 2)
    row_colors = np.where(stripe[:, None], hi[None, :], lo[None, :]).astype(np.float32)
    img = np.repeat(row_colors[:, None, :], w, axis=1)
    img *= _vertical_ramp(h, w, 1.0, rng.uniform(0.35, 0.55))
    return _finish(img, blur_sigma=1.3)


def make_text_blocks(rng: np.random.Generator, size: int = DEFAULT_IMAGE_SIZE) -> np.ndarray:
    """Simulated text: dark ragged lines on a light page with a heavier title
    band near the top (the up cue)."""
    h = w = size
    bg = float(rng.uniform(200, 240))
    ink = float(rng.uniform(15, 60))
    img = np.full((h, w, 3), bg, np.float32)
    margin = int(rng.integers(6, 14))
    # title band
    title_h = int(rng.integers(7, 11))
    y = margin
    img[y:y + title_h, margin:margin + int(w * rng.uniform(0.45, 0.7))] = ink
    y += title_h + int(rng.integers(5, 9))
    # body lines, ragged on the right
    line_h = int(rng.integers(3, 6))
    gap = int(rng.integers(3, 7))
    while y + line_h < h - margin:
        frac = rng.uniform(0.55, 1.0) if rng.uniform() > 0.15 else rng.uniform(0.25, 0.5)
        x1 = margin + int((w - 2 * margin) * frac)
        img[y:y + line_h, margin:x1] = ink + rng.uniform(-8, 8)
        y += line_h + gap
    img *= _vertical_ramp(h, w, 1.0, rng.uniform(0.75, 0.9))
    return _finish(img, blur_sigma=1.8)


def make_gradient_scene(rng: np.random.Generator, size: int = DEFAULT_IMAGE_SIZE) -> np.ndarray:
    """Sky-over-ground gradient with a horizon line and scattered shapes."""
    h = w = size
    horizon = int(h * rng.uniform(0.4, 0.6))
    sky_top = rng.uniform(170, 230, 3)
    sky_bot = rng.uniform(120, 170, 3)
    gnd_top = rng.uniform(60, 110, 3)
    gnd_bot = rng.uniform(15, 50, 3)
    img = np.empty((h, w, 3), np.float32)
    t_sky = np.linspace(0, 1, horizon, dtype=np.float32)[:, None, None]
    img[:horizon] = sky_top[None, None, :] * (1 - t_sky) + sky_bot[None, None, :] * t_sky
    t_gnd = np.linspace(0, 1, h - horizon, dtype=np.float32)[:, None, None]
    img[horizon:] = gnd_top[None, None, :] * (1 - t_gnd) + gnd_bot[None, None, :] * t_gnd
    img = np.ascontiguousarray(img)
    for _ in range(int(rng.integers(3, 7))):
        color = tuple(float(c) for c in rng.uniform(30, 220, 3))
        cx = int(rng.integers(8, w - 8))
        cy = int(rng.integers(horizon, h - 6)) if rng.uniform() < 0.7 else int(rng.integers(6, horizon))
        r = int(rng.integers(3, 9))
        if rng.uniform() < 0.5:
            cv2.circle(img, (cx, cy), r, color, -1)
        else:
            cv2.rectangle(img, (cx - r, cy - r), (cx + r, cy + r), color, -1)
    return _finish(img)


_GENERATORS = {
    "stripes": make_stripes,
    "text_blocks": make_text_blocks,
    "gradient_scene": make_gradient_scene,
}


def generate_image(kind: str, seed: int, index: int, size: int = DEFAULT_IMAGE_SIZE) -> np.ndarray:
    """One deterministic upright image from the (seed, kind, index) stream."""
    if kind not in _GENERATORS:
        raise ValueError(f"unknown corpus kind {kind!r}; expected one of {CORPUS_KINDS}")
    rng = np.random.default_rng([int(seed), _KIND_CODE[kind], int(index)])
    return _GENERATORS[kind](rng, size)


# Utilities outside the oriented-corpus kinds: a checkerboard has two
# orthogonal line families (no unambiguous "up"), useful for exercising the
# classical estimators; noise has no orientation at all.

def make_checkerboard(rng: np.random.Generator, size: int = DEFAULT_IMAGE_SIZE) -> np.ndarray:
    h = w = size
    cell = float(rng.uniform(10, 20))
    lo = rng.uniform(20, 80, 3)
    hi = rng.uniform(160, 235, 3)
    y = np.arange(h, dtype=np.float32)
    x = np.arange(w, dtype=np.float32)
    par = ((y[:, None] // cell) + (x[None, :] // cell)) % 2
    img = np.where(par[:, :, None] > 0.5, hi[None, None, :], lo[None, None, :]).astype(np.float32)
    return _finish(img)


def make_noise(rng: np.random.Generator, size: int = DEFAULT_IMAGE_SIZE) -> np.ndarray:
    return rng.integers(0, 256, (size, size, 3), dtype=np.uint8)

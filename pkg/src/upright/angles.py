"""Circular angle arithmetic in degrees.

Conventions used throughout the package:

- Angles are plain floats in degrees. The canonical ("wrapped") range is
  [0, 360); ``wrap_degrees`` is the constructor that puts any finite real
  there.
- A signed delta is the shortest rotation taking one angle to another,
  in (-180, 180].
- The circular distance between two angles is the shortest arc between
  them, min(|t - p|, 360 - |t - p|), bounded by 180. A prediction of 359
  against a truth of 1 scores 2, not 358, which is what makes this the
  right training loss and evaluation metric for orientations.

Everything here is a pure function; callers may use these from any thread.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence, Tuple

import numpy as np


def wrap_degrees(x: float) -> float:
    """Wrap a finite angle to the canonical range [0, 360).

    Raises ValueError on non-finite input. Wrapping is idempotent, and 360
    maps to 0 (both denote the same orientation). The explicit fixup below
    is needed because e.g. ``-1e-16 % 360`` rounds to exactly 360.0.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"angle must be finite, got {x!r}")
    w = x % 360.0
    if w == 360.0:
        w = 0.0
    return w


def wrap_degrees_array(x: np.ndarray) -> np.ndarray:
    """Vectorized ``wrap_degrees`` for float arrays."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("angles must be finite")
    w = np.mod(x, 360.0)
    return np.where(w == 360.0, 0.0, w)


def circular_distance(t: float, p: float) -> float:
    """Shortest arc between two wrapped angles: min(|t-p|, 360-|t-p|).

    Both inputs are expected in [0, 360). The result is in [0, 180] and is
    symmetric in its arguments.
    """
    d = abs(t - p)
    return min(d, 360.0 - d)


def signed_shortest_delta(t: float, p: float) -> float:
    """The unique delta in (-180, 180] with wrap(p + delta) = t.

    Positive means t is reached from p by a counter-clockwise rotation.
    |delta| equals circular_distance(t, p) (at the antipode, where both
    +180 and -180 would work, +180 is returned).
    """
    d = (t - p) % 360.0
    if d > 180.0:
        d -= 360.0
    return d


def circular_loss(truths: Sequence[float], raw_predictions: Sequence[float]) -> float:
    """Mean circular distance between truths and wrapped raw predictions.

    ``truths`` are wrapped angles; ``raw_predictions`` are the model's
    unwrapped linear outputs and are wrapped modulo 360 before the distance
    is taken, which keeps the loss well-defined and periodic for any real
    output. Raises ValueError on empty or mismatched inputs.
    """
    t = np.asarray(truths, dtype=np.float64)
    p = np.asarray(raw_predictions, dtype=np.float64)
    if t.size == 0:
        raise ValueError("circular_loss requires at least one pair")
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.shape} truths vs {p.shape} predictions")
    pw = wrap_degrees_array(p)
    d = np.abs(t - pw)
    return float(np.mean(np.minimum(d, 360.0 - d)))


def circular_loss_subgradient(t: float, p_raw: float) -> float:
    """d/dp of circular_distance(t, wrap(p)) at p = p_raw.

    The distance is piecewise linear in p with slope -1 or +1, so the value
    is in {-1, 0, +1}: it is -sign(signed_shortest_delta(t, wrap(p))), and 0
    exactly at the two kinks (distance 0 and distance 180). The zero at the
    minimum is the standard subgradient choice; at the maximum it avoids an
    arbitrary direction.
    """
    tw = wrap_degrees(t)
    pw = wrap_degrees(p_raw)
    delta = signed_shortest_delta(tw, pw)
    if delta == 0.0 or delta == 180.0:
        return 0.0
    return -math.copysign(1.0, delta)


def mean_absolute_angular_error(pairs: Iterable[Tuple[float, float]]) -> float:
    """Mean circular distance over (truth, prediction) pairs of wrapped angles.

    This is the evaluation metric used everywhere in the package; it equals
    circular_loss when the predictions are pre-wrapped.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("mean_absolute_angular_error requires at least one pair")
    return float(np.mean([circular_distance(t, p) for t, p in pairs]))

"""Unit and property tests for the circular angle arithmetic.

The brute-force oracle used here (min over k of |t - p + 360k|) is kept
independent of the implementation under test on purpose.
"""

import math

import numpy as np
import pytest

from upright.angles import (
    circular_distance,
    circular_loss,
    circular_loss_subgradient,
    mean_absolute_angular_error,
    signed_shortest_delta,
    wrap_degrees,
    wrap_degrees_array,
)


def dist_oracle(t, p):
    return min(abs(t - p + 360.0 * k) for k in (-2, -1, 0, 1, 2))


def delta_oracle(t, p):
    sel = [t - p + 360.0 * k for k in (-1, 0, 1) if -180.0 < t - p + 360.0 * k <= 180.0]
    assert len(sel) == 1
    return sel[0]


# --- wrap_degrees -----------------------------------------------------------

def test_wrap_examples():
    assert wrap_degrees(0) == 0.0
    assert wrap_degrees(365) == 5.0
    assert wrap_degrees(-30) == 330.0


def test_wrap_boundary_and_tiny_negative():
    assert wrap_degrees(360.0) == 0.0
    assert wrap_degrees(720.0) == 0.0
    # -1e-16 % 360 rounds to 360.0 in IEEE double; the wrap must still land in [0, 360)
    assert 0.0 <= wrap_degrees(-1e-16) < 360.0


def test_wrap_idempotent_and_congruent():
    rng = np.random.default_rng(42)
    for x in rng.uniform(-1e4, 1e4, 1000):
        w = wrap_degrees(x)
        assert 0.0 <= w < 360.0
        assert wrap_degrees(w) == w
        assert abs((w - x) % 360.0) % 360.0 < 1e-6


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_wrap_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        wrap_degrees(bad)
    with pytest.raises(ValueError):
        wrap_degrees_array(np.array([0.0, bad]))


# --- circular_distance ------------------------------------------------------

def test_distance_paper_motivation():
    # truth 1, prediction 359: the short way round is 2, not 358
    assert circular_distance(1.0, 359.0) == 2.0


def test_distance_trivial_cases():
    for t in (0.0, 10.0, 123.456, 359.9):
        assert circular_distance(t, t) == 0.0
    assert circular_distance(10.0, 200.0) == 170.0


def test_distance_symmetry_range_and_oracle():
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        a = wrap_degrees(rng.uniform(-720, 720))
        b = wrap_degrees(rng.uniform(-720, 720))
        d = circular_distance(a, b)
        assert d == circular_distance(b, a)
        assert 0.0 <= d <= 180.0
        assert abs(d - dist_oracle(a, b)) < 1e-9


def test_distance_rotation_invariance():
    rng = np.random.default_rng(11)
    for _ in range(2000):
        a, b = rng.uniform(0, 360, 2)
        c = rng.uniform(-1000, 1000)
        d0 = circular_distance(a, b)
        d1 = circular_distance(wrap_degrees(a + c), wrap_degrees(b + c))
        assert abs(d0 - d1) < 1e-9


def test_distance_triangle_inequality():
    rng = np.random.default_rng(13)
    for _ in range(5000):
        a, b, c = rng.uniform(0, 360, 3)
        assert circular_distance(a, c) <= circular_distance(a, b) + circular_distance(b, c) + 1e-12


def test_l1_degeneracy_on_dyadic_grid():
    # For signed angles in [-90, 90] the circular distance equals plain |t - p|.
    # Sampling on a dyadic grid (k / 1024 degrees) keeps every intermediate
    # (x + 360, differences, 360 - d) exactly representable, so the equality
    # holds bit-for-bit rather than merely to rounding error.
    rng = np.random.default_rng(17)
    k = rng.integers(-90 * 1024, 90 * 1024 + 1, size=(10_000, 2))
    for ti, pi in k:
        t = ti / 1024.0
        p = pi / 1024.0
        assert circular_distance(wrap_degrees(t), wrap_degrees(p)) == abs(t - p)


def test_l1_degeneracy_continuous_floats():
    rng = np.random.default_rng(19)
    for _ in range(5000):
        t, p = rng.uniform(-90, 90, 2)
        d = circular_distance(wrap_degrees(t), wrap_degrees(p))
        assert abs(d - abs(t - p)) < 1e-9


# --- signed_shortest_delta --------------------------------------------------

def test_signed_delta_examples():
    assert signed_shortest_delta(1.0, 359.0) == delta_oracle(1, 359) == 2.0
    assert signed_shortest_delta(359.0, 1.0) == delta_oracle(359, 1) == -2.0
    assert signed_shortest_delta(42.0, 42.0) == 0.0


def test_signed_delta_properties():
    rng = np.random.default_rng(23)
    for _ in range(10_000):
        t = wrap_degrees(rng.uniform(0, 360))
        p = wrap_degrees(rng.uniform(0, 360))
        d = signed_shortest_delta(t, p)
        assert -180.0 < d <= 180.0
        # applying the delta lands exactly on the target
        assert abs(circular_distance(wrap_degrees(p + d), t)) < 1e-9
        # magnitude matches the circular distance
        assert abs(abs(d) - circular_distance(t, p)) < 1e-9


def test_signed_delta_antipode_prefers_positive():
    assert signed_shortest_delta(180.0, 0.0) == 180.0
    assert signed_shortest_delta(0.0, 180.0) == 180.0


# --- circular_loss ----------------------------------------------------------

def test_loss_paper_example():
    assert circular_loss([1.0], [359.0]) == 2.0


def test_loss_identity_and_mean():
    assert circular_loss([10.0, 350.0], [10.0, 350.0]) == 0.0
    # distances 90 and 90 via the brute-force oracle -> mean 90
    assert circular_loss([0.0, 0.0], [90.0, 270.0]) == 90.0


def test_loss_wraps_raw_predictions():
    # raw linear outputs far outside [0, 360) are wrapped before scoring
    assert circular_loss([10.0], [370.0]) == 0.0
    assert circular_loss([10.0], [-350.0]) == 0.0
    assert circular_loss([1.0], [359.0 - 720.0]) == 2.0


def test_loss_input_validation():
    with pytest.raises(ValueError):
        circular_loss([], [])
    with pytest.raises(ValueError):
        circular_loss([1.0, 2.0], [1.0])


# --- subgradient ------------------------------------------------------------

def test_subgradient_examples():
    assert circular_loss_subgradient(90.0, 80.0) == -1.0
    assert circular_loss_subgradient(42.0, 42.0) == 0.0
    assert circular_loss_subgradient(0.0, 180.0) == 0.0


def test_subgradient_matches_finite_difference():
    rng = np.random.default_rng(29)
    h = 1e-4
    n = 0
    while n < 1000:
        t = rng.uniform(0, 360)
        p = rng.uniform(-360, 720)
        d = circular_distance(wrap_degrees(t), wrap_degrees(p))
        if d < 0.01 or d > 179.99:
            continue
        n += 1
        fd = (circular_loss([t], [p + h]) - circular_loss([t], [p - h])) / (2 * h)
        assert abs(circular_loss_subgradient(t, p) - fd) < 1e-3


def test_subgradient_values_are_unit():
    rng = np.random.default_rng(31)
    for _ in range(2000):
        g = circular_loss_subgradient(rng.uniform(0, 360), rng.uniform(-720, 720))
        assert g in (-1.0, 0.0, 1.0)


# --- mean_absolute_angular_error --------------------------------------------

def test_mae_examples():
    assert mean_absolute_angular_error([(1.0, 359.0), (359.0, 1.0)]) == 2.0
    assert mean_absolute_angular_error([(77.0, 77.0)]) == 0.0
    assert mean_absolute_angular_error([(0.0, 90.0)]) == 90.0


def test_mae_agrees_with_loss_on_wrapped_predictions():
    rng = np.random.default_rng(37)
    t = rng.uniform(0, 360, 100)
    p = rng.uniform(0, 360, 100)
    assert mean_absolute_angular_error(zip(t, p)) == pytest.approx(circular_loss(t, p), abs=1e-12)


def test_mae_empty_rejected():
    with pytest.raises(ValueError):
        mean_absolute_angular_error([])

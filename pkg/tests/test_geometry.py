import math

import numpy as np
import pytest

from rcm_lab.geometry import (Region, clipped_lens_difference_area,
                              euclidean_distance, lens_difference_area,
                              lens_difference_derivative, toroidal_distance)

from _oracles import lens_area_mc, torus_distance_reference


def test_region_validation():
    with pytest.raises(ValueError):
        Region("disk", 1.0)
    with pytest.raises(ValueError):
        Region("square", 0.0)
    with pytest.raises(ValueError):
        Region("square", math.inf)
    assert Region("torus", 2.0).area == 4.0


def test_region_contains():
    reg = Region("square", 2.0)
    assert reg.contains((0.0, 0.0))
    assert reg.contains((1.0, -1.0))  # boundary included
    assert not reg.contains((1.0001, 0.0))
    flags = reg.contains(np.array([[0.0, 0.0], [3.0, 0.0]]))
    assert list(flags) == [True, False]


def test_euclidean_distance():
    assert euclidean_distance((0.0, 0.0), (3.0, 4.0)) == 5.0


def test_toroidal_distance_matches_reference():
    rng = np.random.default_rng(11)
    side = 3.0
    for _ in range(200):
        p = rng.uniform(-side / 2, side / 2, 2)
        q = rng.uniform(-side / 2, side / 2, 2)
        want = torus_distance_reference(p, q, side)
        got = toroidal_distance(p, q, side)
        assert abs(got - want) < 1e-12


def test_toroidal_never_exceeds_euclidean():
    rng = np.random.default_rng(12)
    side = 5.0
    p = rng.uniform(-side / 2, side / 2, (300, 2))
    q = rng.uniform(-side / 2, side / 2, (300, 2))
    dt = toroidal_distance(p, q, side)
    de = np.hypot(p[:, 0] - q[:, 0], p[:, 1] - q[:, 1])
    assert np.all(dt <= de + 1e-12)
    assert np.all(dt <= side * math.sqrt(2.0) / 2.0 + 1e-12)


def test_region_distance_dispatch():
    p, q = (0.9, 0.0), (-0.9, 0.0)
    assert Region("square", 2.0).distance(p, q) == pytest.approx(1.8)
    assert Region("torus", 2.0).distance(p, q) == pytest.approx(0.2)


def test_lens_area_endpoints():
    assert lens_difference_area(0.0, 1.0) == 0.0
    assert lens_difference_area(2.0, 1.0) == pytest.approx(math.pi)
    assert lens_difference_area(7.5, 1.0) == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        lens_difference_area(-0.1, 1.0)
    with pytest.raises(ValueError):
        lens_difference_area(0.5, 0.0)


def test_lens_area_unit_value():
    # Frozen reference for z = r = 1: pi/3 + sqrt(3)/2, cross-checked by
    # hit-counting MC below.
    want = math.pi / 3.0 + math.sqrt(3.0) / 2.0
    assert want == pytest.approx(1.9132229549810362, abs=1e-15)
    assert lens_difference_area(1.0, 1.0) == pytest.approx(want, rel=1e-12)


def test_lens_area_against_mc():
    for z, r, seed in ((1.0, 1.0, 3), (0.4, 1.3, 4), (1.9, 1.0, 5)):
        mc = lens_area_mc(z, r, 2_000_000, seed)
        se = math.pi * r * r / math.sqrt(2e6)
        assert abs(lens_difference_area(z, r) - mc) < 5.0 * se


def test_lens_area_monotone_and_bounded():
    rng = np.random.default_rng(21)
    z = np.sort(rng.uniform(0.0, 2.0, 500))
    vals = lens_difference_area(z, 1.0)
    assert np.all(np.diff(vals) >= -1e-12)
    assert np.all(vals >= 0.0)
    assert np.all(vals <= math.pi + 1e-12)


def test_lens_lower_bound_sqrt3rz():
    rng = np.random.default_rng(22)
    r = rng.uniform(0.1, 3.0, 1000)
    z = r * rng.uniform(0.0, 1.0, 1000)  # z <= r
    vals = np.array([lens_difference_area(zi, ri) for zi, ri in zip(z, r)])
    assert np.all(vals >= math.sqrt(3.0) * r * z - 1e-12)


def test_lens_derivative_matches_finite_difference():
    rng = np.random.default_rng(23)
    for _ in range(200):
        r = rng.uniform(0.2, 2.0)
        z = rng.uniform(0.05, 0.95) * r
        h = 1e-5 * r
        fd = (lens_difference_area(z + h, r)
              - lens_difference_area(z - h, r)) / (2.0 * h)
        dv = lens_difference_derivative(z, r)
        assert abs(dv - fd) < 1e-6 * max(abs(dv), 1.0)
    assert lens_difference_derivative(2.0, 1.0) == 0.0
    assert lens_difference_derivative(0.0, 1.0) == pytest.approx(2.0)


def test_clipped_lens_requires_square():
    with pytest.raises(ValueError):
        clipped_lens_difference_area((0, 0), (1, 0), 1.0, Region("torus", 4.0))


def test_clipped_lens_equals_unclipped_when_interior():
    reg = Region("square", 50.0)
    rng = np.random.default_rng(31)
    for _ in range(20):
        r = rng.uniform(0.3, 2.0)
        x1 = rng.uniform(-3, 3, 2)
        z = rng.uniform(0.0, 2.0 * r)
        ang = rng.uniform(0.0, 2.0 * math.pi)
        x2 = x1 + z * np.array([math.cos(ang), math.sin(ang)])
        got = clipped_lens_difference_area(x1, x2, r, reg)
        assert got == pytest.approx(lens_difference_area(z, r), abs=1e-7)


def test_clipped_lens_never_exceeds_unclipped():
    rng = np.random.default_rng(32)
    reg = Region("square", 4.0)
    for _ in range(1000):
        r = rng.uniform(0.2, 2.5)
        x1 = rng.uniform(-2, 2, 2)
        x2 = rng.uniform(-2, 2, 2)
        z = float(np.hypot(*(x1 - x2)))
        clipped = clipped_lens_difference_area(x1, x2, r, reg)
        assert clipped <= lens_difference_area(z, r) + 1e-8
        assert clipped >= -1e-12


def test_clipped_lens_far_second_center():
    # second disk fully outside the first: clipped area is just the
    # clipped first disk
    reg = Region("square", 10.0)
    got = clipped_lens_difference_area((0.0, 0.0), (100.0, 0.0), 1.0, reg)
    assert got == pytest.approx(math.pi, rel=1e-9)

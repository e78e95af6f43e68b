from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from approxgroup.besicovitch import (BallConfiguration, CounterWitness, NoCommonPoint,
                                     PropertyHolds, check_weak_besicovitch, common_point,
                                     euclidean_bound, hexagon_witness, matrix_space_bound,
                                     min_angular_gap, open_ball_pair, sample_shared_point_config,
                                     upper_bound_property_test)


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    if d == 1:
        return np.array([[rng.choice([-1.0, 1.0])]])
    if d == 3:
        return Rotation.random(random_state=int(rng.integers(2**31))).as_matrix()
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def test_common_point_examples():
    cfg = BallConfiguration(np.zeros((3, 2)), [1.0, 2.0, 0.5])
    assert np.allclose(common_point(cfg), 0)
    p = common_point(hexagon_witness())
    assert p is not None and np.linalg.norm(p) <= 1e-9
    far = BallConfiguration([[0.0, 0.0], [3.0, 0.0]], [1.0, 1.0])
    assert common_point(far) is None
    assert isinstance(check_weak_besicovitch(far), NoCommonPoint)


def test_identical_balls_have_property():
    cfg = BallConfiguration([[1.0, 2.0], [1.0, 2.0]], [0.5, 0.5])
    assert isinstance(check_weak_besicovitch(cfg), PropertyHolds)


def test_hexagon_counter_witness():
    h = hexagon_witness()
    assert len(h) == 7
    v = check_weak_besicovitch(h)
    assert isinstance(v, CounterWitness)
    assert np.linalg.norm(v.point) <= 1e-9
    assert open_ball_pair(h) is None
    d = np.linalg.norm(h.centers[:, None] - h.centers[None], axis=-1)
    off = d[~np.eye(7, dtype=bool)]
    assert off.min() >= 1 - 1e-12
    assert np.allclose(d[6, :6], 1.0)


@pytest.mark.parametrize("delta", [2e-9, 1e-6, 1e-3, 0.5])
@pytest.mark.parametrize("which", range(7))
def test_hexagon_flips_when_a_radius_grows(delta, which):
    h = hexagon_witness()
    radii = h.radii.copy()
    radii[which] += delta
    assert isinstance(check_weak_besicovitch(BallConfiguration(h.centers, radii)), PropertyHolds)


def test_hexagon_pigeonhole():
    h = hexagon_witness()
    ring = h.centers[:6]
    assert min_angular_gap(ring) == pytest.approx(math.pi / 3)
    for theta in np.linspace(0, 2 * math.pi, 721)[:-1]:
        extra = np.array([[math.cos(theta), math.sin(theta)]])
        assert min_angular_gap(np.vstack([ring, extra])) < math.pi / 3


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 2 * math.pi, allow_nan=False))
def test_pigeonhole_property(theta):
    ring = hexagon_witness().centers[:6]
    extra = np.array([[math.cos(theta), math.sin(theta)]])
    assert min_angular_gap(np.vstack([ring, extra])) < math.pi / 3


def test_bounds():
    assert matrix_space_bound(1) == 10
    assert matrix_space_bound(2) == 6562
    assert euclidean_bound(2) == 10
    with pytest.raises(ValueError):
        matrix_space_bound(0)


@pytest.mark.parametrize("d", [1, 2])
def test_upper_bound_small(d):
    rep = upper_bound_property_test(d, 300, seed=4)
    assert rep["balls"] == 3 ** d + 1
    assert rep["violations"] == 0
    assert all(r["verdict"] == "PropertyHolds" for r in rep["rows"])


def test_upper_bound_rejects_bad_args():
    with pytest.raises(ValueError):
        upper_bound_property_test(0, 10)
    with pytest.raises(ValueError):
        upper_bound_property_test(2, 0)


def test_upper_bound_is_seeded(monkeypatch):
    a = upper_bound_property_test(2, 50, seed=9)
    monkeypatch.setenv("APPROXGROUP_THREADS", "4")
    b = upper_bound_property_test(2, 50, seed=9)
    assert a == b


@pytest.mark.parametrize("d", [1, 2, 3])
def test_isometry_invariance(d):
    rng = np.random.default_rng(d)
    for _ in range(1000):
        cfg, p = sample_shared_point_config(d, int(rng.integers(2, 3 ** d + 2)), rng)
        rot = random_orthogonal(d, rng)
        shift = rng.standard_normal(d) * 10
        moved = cfg.transformed(rot, shift)
        v1 = check_weak_besicovitch(cfg, hint=p)
        v2 = check_weak_besicovitch(moved, hint=rot @ p + shift)
        assert v1.kind == v2.kind


def test_hexagon_invariant_under_rotation():
    rng = np.random.default_rng(0)
    for _ in range(200):
        rot = random_orthogonal(2, rng)
        shift = rng.standard_normal(2)
        moved = hexagon_witness().transformed(rot, shift, scale=float(rng.uniform(0.5, 2)))
        v = check_weak_besicovitch(moved, hint=shift)
        assert open_ball_pair(moved) is None
        assert isinstance(v, CounterWitness)


def test_config_json_round_trip():
    h = hexagon_witness()
    back = BallConfiguration.from_json(h.to_json())
    assert np.array_equal(back.centers, h.centers) and np.array_equal(back.radii, h.radii)


def test_matrix_configuration():
    mats = [np.eye(2), np.diag([1, -1]), np.diag([1j, -1j])]
    # pairwise distances are exactly 2, so radius 2 puts no centre in an open ball
    tight = BallConfiguration.from_matrices(mats, [2.0, 2.0, 2.0])
    assert tight.dim == 8 and tight.space == "matrix"
    assert isinstance(check_weak_besicovitch(tight), CounterWitness)
    loose = BallConfiguration.from_matrices(mats, [2.5, 2.5, 2.5])
    assert isinstance(check_weak_besicovitch(loose), PropertyHolds)

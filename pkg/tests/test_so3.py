import math

import numpy as np
import pytest

from fwmav.errors import Degenerate, NonSkew
from fwmav.so3 import (
    exp_so3,
    hat,
    is_rotation,
    log_so3,
    project_so3,
    right_jacobian,
    right_jacobian_inv,
    rotation_to_align,
    vee,
)
from fwmav.sampling import random_rotation

HAT_123 = np.array([[0.0, -3.0, 2.0], [3.0, 0.0, -1.0], [-2.0, 1.0, 0.0]])


def test_hat_examples():
    assert np.array_equal(hat([0, 0, 0]), np.zeros((3, 3)))
    assert np.array_equal(hat([1, 2, 3]), HAT_123)


def test_hat_is_cross_product(rng):
    a, b = rng.normal(size=(2, 3))
    assert np.allclose(hat(a) @ b, np.cross(a, b), atol=1e-15)


def test_hat_batched_matches_single(rng):
    v = rng.normal(size=(4, 5, 3))
    H = hat(v)
    assert H.shape == (4, 5, 3, 3)
    assert np.array_equal(H[2, 3], hat(v[2, 3]))


def test_vee_examples():
    assert np.array_equal(vee(np.zeros((3, 3))), np.zeros(3))
    assert np.array_equal(vee(HAT_123), [1.0, 2.0, 3.0])


def test_vee_rejects_symmetric_part():
    with pytest.raises(NonSkew):
        vee(HAT_123 + 1e-3 * np.eye(3))


def test_exp_examples():
    assert np.array_equal(exp_so3(np.zeros(3)), np.eye(3))
    y = exp_so3([math.pi / 2, 0.0, 0.0]) @ [0.0, 1.0, 0.0]
    assert np.allclose(y, [0.0, 0.0, 1.0], atol=1e-15)


@pytest.mark.parametrize("theta", [0.0, 1e-9, 1e-5, 1e-4, 0.3, 2.0, math.pi - 1e-2, math.pi - 1e-6])
def test_exp_log_roundtrip(rng, theta):
    for _ in range(20):
        axis = rng.normal(size=3)
        w = theta * axis / np.linalg.norm(axis)
        R = exp_so3(w)
        assert is_rotation(R, 1e-13)
        assert np.allclose(log_so3(R), w, atol=1e-9)


def test_exp_batched_matches_single(rng):
    v = rng.normal(size=(7, 3)) * np.array([[1e-6], [1e-5], [0.1], [1.0], [2.0], [3.0], [0.0]])
    R = exp_so3(v)
    for i in range(len(v)):
        assert np.allclose(R[i], exp_so3(v[i]), atol=1e-15)


def test_log_identity_and_half_turn():
    assert np.array_equal(log_so3(np.eye(3)), np.zeros(3))
    Rz = np.diag([-1.0, -1.0, 1.0])
    w = log_so3(Rz)
    assert np.allclose(np.abs(w), [0.0, 0.0, math.pi], atol=1e-12)
    assert np.allclose(exp_so3(w), Rz, atol=1e-12)


def test_log_half_turn_random_axes(rng):
    for _ in range(50):
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        R = exp_so3(math.pi * n)
        w = log_so3(R)
        assert abs(np.linalg.norm(w) - math.pi) < 1e-12
        assert np.allclose(exp_so3(w), R, atol=1e-12)


def test_project_examples(rng):
    R = random_rotation(rng)
    assert np.allclose(project_so3(R), R, atol=1e-12)
    assert np.allclose(project_so3(1.01 * np.eye(3)), np.eye(3), atol=1e-15)
    for _ in range(20):
        R = random_rotation(rng)
        P = project_so3(R + 1e-6 * rng.normal(size=(3, 3)))
        assert is_rotation(P, 1e-12)
        assert np.linalg.norm(P - R) < 2e-6 * 3


def test_project_rejects_reflection():
    with pytest.raises(Degenerate):
        project_so3(np.diag([1.0, 1.0, -1.0]))


def test_right_jacobian_definition(rng):
    # exp(v)^T d/dh exp(v + h dv) = hat(J_r(v) dv)
    h = 1e-6
    for _ in range(10):
        v, dv = rng.normal(size=(2, 3))
        dR = (exp_so3(v + h * dv) - exp_so3(v - h * dv)) / (2 * h)
        W = exp_so3(v).T @ dR
        assert np.allclose(vee(W, tol=1e-6), right_jacobian(v) @ dv, atol=1e-8)


def test_right_jacobian_inverse(rng):
    for scale in (1e-6, 0.5, 2.5):
        v = scale * rng.normal(size=3)
        assert np.allclose(right_jacobian_inv(v) @ right_jacobian(v), np.eye(3), atol=1e-12)
    v = rng.normal(size=(5, 3))
    J = right_jacobian(v)
    assert all(np.allclose(J[i], right_jacobian(v[i]), atol=1e-15) for i in range(5))


def test_rotation_to_align(rng):
    for a, b in [(rng.normal(size=3), rng.normal(size=3)), ([0, 0, 1], [0, 0, -2]), ([1, 0, 0], [3, 0, 0])]:
        R = rotation_to_align(a, b)
        Ra = R @ np.asarray(a, float)
        assert is_rotation(R, 1e-12)
        assert np.allclose(Ra / np.linalg.norm(Ra), np.asarray(b, float) / np.linalg.norm(b), atol=1e-12)

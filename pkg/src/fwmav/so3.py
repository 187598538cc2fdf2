"""Rotation-group primitives.

Rotations are plain ``(3, 3)`` float arrays. ``hat``, ``exp_so3`` and the
Jacobians also accept stacks of shape ``(..., 3)`` so the verification code
can evaluate many configurations at once.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import Degenerate, InvalidRotation, NonSkew

SMALL_ANGLE = 1e-4
# Below this distance from pi the log switches to the symmetric-part branch.
NEAR_PI = 1e-3

E_Z = np.array([0.0, 0.0, 1.0])
_EYE = np.eye(3)
_EYE.flags.writeable = False


def hat(v):
    """Cross-product matrix: ``hat(v) @ w == np.cross(v, w)``."""
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        x, y, z = v
        return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def cross(a, b):
    """Cross product of two 3-vectors (much cheaper than ``np.cross`` for one pair)."""
    a0, a1, a2 = a
    b0, b1, b2 = b
    return np.array([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])


def vee(S, tol=1e-8):
    """Inverse of :func:`hat`. Raises :class:`NonSkew` if ``S + S.T`` is not ~0."""
    S = np.asarray(S, dtype=float)
    if np.linalg.norm(S + S.T) > tol:
        raise NonSkew(f"matrix is not skew-symmetric (|S + S^T|_F = {np.linalg.norm(S + S.T):.3e})")
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def skew_part_vee(M):
    """``vee`` of the skew-symmetric part of ``M`` (no precondition)."""
    M = np.asarray(M, dtype=float)
    return 0.5 * np.stack(
        [M[..., 2, 1] - M[..., 1, 2], M[..., 0, 2] - M[..., 2, 0], M[..., 1, 0] - M[..., 0, 1]],
        axis=-1,
    )


def _rodrigues_coeffs(theta2):
    """Return ``(sin t / t, (1 - cos t) / t^2)`` for scalar ``t^2``."""
    if theta2 < SMALL_ANGLE * SMALL_ANGLE:
        return 1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0
    t = math.sqrt(theta2)
    return math.sin(t) / t, (1.0 - math.cos(t)) / theta2


def exp_so3(v):
    """Rodrigues exponential ``R = I + a*K + b*K@K`` with ``K = hat(v)``."""
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        a, b = _rodrigues_coeffs(float(v @ v))
        K = hat(v)
        return _EYE + a * K + b * (K @ K)
    theta2 = np.einsum("...i,...i->...", v, v)
    small = theta2 < SMALL_ANGLE * SMALL_ANGLE
    t = np.sqrt(np.where(small, 1.0, theta2))
    a = np.where(small, 1.0 - theta2 / 6.0, np.sin(t) / t)
    b = np.where(small, 0.5 - theta2 / 24.0, (1.0 - np.cos(t)) / np.where(small, 1.0, theta2))
    K = hat(v)
    return np.eye(3) + a[..., None, None] * K + b[..., None, None] * (K @ K)


def log_so3(R):
    """Principal logarithm, returning a rotation vector with norm in ``[0, pi]``.

    At exactly pi the axis is taken from the column of the symmetric part with
    the largest diagonal entry and its sign fixed so that the first nonzero
    component is positive.
    """
    R = np.asarray(R, dtype=float)
    w = skew_part_vee(R)
    s = math.sqrt(float(w @ w))
    c = 0.5 * (np.trace(R) - 1.0)
    theta = math.atan2(s, c)
    if theta < SMALL_ANGLE:
        return (1.0 + theta * theta / 6.0) * w
    if math.pi - theta > NEAR_PI:
        return (theta / s) * w
    B = (0.5 * (R + R.T) - c * np.eye(3)) / (1.0 - c)
    k = int(np.argmax(np.diag(B)))
    n = B[:, k] / math.sqrt(B[k, k])
    n /= np.linalg.norm(n)
    if s > 1e-10:
        if n @ w < 0.0:
            n = -n
    else:
        first = n[np.flatnonzero(np.abs(n) > 1e-12)[0]]
        if first < 0.0:
            n = -n
    return theta * n


def project_so3(M):
    """Nearest rotation in the Frobenius norm (polar factor via SVD)."""
    M = np.asarray(M, dtype=float)
    if np.linalg.det(M) <= 1e-12:
        raise Degenerate(f"cannot project matrix with det {np.linalg.det(M):.3e} onto SO(3)")
    U, _, Vt = np.linalg.svd(M)
    return U @ Vt


def right_jacobian(v):
    """Right Jacobian of the exponential: ``exp(v)^T d/dt exp(v) = hat(J_r(v) v')``."""
    v = np.asarray(v, dtype=float)
    if v.ndim > 1:
        theta2 = np.einsum("...i,...i->...", v, v)
        small = theta2 < SMALL_ANGLE * SMALL_ANGLE
        t2 = np.where(small, 1.0, theta2)
        t = np.sqrt(t2)
        b = np.where(small, 0.5 - theta2 / 24.0, (1.0 - np.cos(t)) / t2)
        c = np.where(small, 1.0 / 6.0 - theta2 / 120.0, (t - np.sin(t)) / (t2 * t))
        K = hat(v)
        return np.eye(3) - b[..., None, None] * K + c[..., None, None] * (K @ K)
    theta2 = float(v @ v)
    if theta2 < SMALL_ANGLE * SMALL_ANGLE:
        b, c = 0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0
    else:
        t = math.sqrt(theta2)
        b = (1.0 - math.cos(t)) / theta2
        c = (t - math.sin(t)) / (theta2 * t)
    K = hat(v)
    return _EYE - b * K + c * (K @ K)


def right_jacobian_inv(v):
    """Inverse of :func:`right_jacobian` in closed form."""
    v = np.asarray(v, dtype=float)
    theta2 = float(v @ v)
    if theta2 < SMALL_ANGLE * SMALL_ANGLE:
        d = 1.0 / 12.0 + theta2 / 720.0
    else:
        t = math.sqrt(theta2)
        d = 1.0 / theta2 - (1.0 + math.cos(t)) / (2.0 * t * math.sin(t))
    K = hat(v)
    return _EYE + 0.5 * K + d * (K @ K)


def is_rotation(R, tol=1e-9):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    ortho = np.linalg.norm(R.T @ R - np.eye(3))
    return ortho <= tol and abs(np.linalg.det(R) - 1.0) <= tol


def as_rotation(R, name="rotation", tol=1e-9):
    """Validate and return ``R`` as a float array; raise :class:`InvalidRotation`."""
    R = np.array(R, dtype=float)
    if not is_rotation(R, tol):
        raise InvalidRotation(f"{name} is not a rotation matrix")
    return R


def rotation_to_align(a, b):
    """Some rotation ``R`` with ``R @ a`` parallel to ``b`` (both nonzero)."""
    a = np.asarray(a, float) / np.linalg.norm(a)
    b = np.asarray(b, float) / np.linalg.norm(b)
    axis = np.cross(a, b)
    s = np.linalg.norm(axis)
    c = float(a @ b)
    if s < 1e-12:
        if c > 0.0:
            return np.eye(3)
        perp = np.cross(a, [1.0, 0.0, 0.0])
        if np.linalg.norm(perp) < 1e-6:
            perp = np.cross(a, [0.0, 1.0, 0.0])
        return exp_so3(math.pi * perp / np.linalg.norm(perp))
    return exp_so3(math.atan2(s, c) * axis / s)

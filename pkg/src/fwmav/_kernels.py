"""Compiled stepping loop for the built-in force providers.

Mirrors ``dynamics._rates`` and the two steppers in ``integrator`` on flat
arrays so long runs avoid per-call numpy overhead. ``tests/test_kernels.py``
pins this path to the pure-Python one.

Array layout
------------
``x``      : r_I(3), r(3), momenta(12)
``R``      : (3, 3, 3) stack of R_BI, R_WLB, R_WRB
``G``      : Gamma(3)
``scal``   : m_T, g, m_WL, m_WR
``inv``    : (3, 3, 3) inverse inertias of torso, left wing, right wing
``hbar``   : (2, 3) wing COM offsets
``forc``   : amplitude, frequency, phase_L, phase_R, axis_L(3), axis_R(3), c_lin, c_rot
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_SMALL2 = 1e-8  # SMALL_ANGLE**2


@njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def _mv(A, v):
    out = np.empty(3)
    for i in range(3):
        out[i] = A[i, 0] * v[0] + A[i, 1] * v[1] + A[i, 2] * v[2]
    return out


@njit(cache=True)
def _mtv(A, v):
    out = np.empty(3)
    for i in range(3):
        out[i] = A[0, i] * v[0] + A[1, i] * v[1] + A[2, i] * v[2]
    return out


@njit(cache=True)
def _mm(A, B):
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            out[i, j] = A[i, 0] * B[0, j] + A[i, 1] * B[1, j] + A[i, 2] * B[2, j]
    return out


@njit(cache=True)
def _exp(v):
    t2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
    if t2 < _SMALL2:
        a = 1.0 - t2 / 6.0
        b = 0.5 - t2 / 24.0
    else:
        t = math.sqrt(t2)
        a = math.sin(t) / t
        b = (1.0 - math.cos(t)) / t2
    x, y, z = v[0], v[1], v[2]
    R = np.empty((3, 3))
    R[0, 0] = 1.0 - b * (y * y + z * z)
    R[1, 1] = 1.0 - b * (x * x + z * z)
    R[2, 2] = 1.0 - b * (x * x + y * y)
    R[0, 1] = -a * z + b * x * y
    R[1, 0] = a * z + b * x * y
    R[0, 2] = a * y + b * x * z
    R[2, 0] = -a * y + b * x * z
    R[1, 2] = -a * x + b * y * z
    R[2, 1] = a * x + b * y * z
    return R


@njit(cache=True)
def _jr_inv_apply(v, w):
    """``right_jacobian_inv(v) @ w``."""
    t2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
    if t2 < _SMALL2:
        d = 1.0 / 12.0 + t2 / 720.0
    else:
        t = math.sqrt(t2)
        d = 1.0 / t2 - (1.0 + math.cos(t)) / (2.0 * t * math.sin(t))
    vw = _cross(v, w)
    vvw = _cross(v, vw)
    return w + 0.5 * vw + d * vvw


@njit(cache=True)
def _velocities(scal, inv, R, m):
    z = np.empty(12)
    muL = m[6:9]
    muR = m[9:12]
    y = m[3:6] - _mv(R[1], muL) - _mv(R[2], muR)
    wB = _mv(inv[0], y)
    z[0:3] = m[0:3] / scal[0]
    z[3:6] = wB
    z[6:9] = _mv(inv[1], muL) - _mtv(R[1], wB)
    z[9:12] = _mv(inv[2], muR) - _mtv(R[2], wB)
    return z


@njit(cache=True)
def _loads(forc, t, z):
    gen = np.zeros(12)
    c_lin = forc[10]
    c_rot = forc[11]
    if c_lin != 0.0:
        gen[0:3] = -c_lin * z[0:3]
    if c_rot != 0.0:
        gen[3:12] = -c_rot * z[3:12]
    amp = forc[0]
    if amp != 0.0:
        w = 2.0 * math.pi * forc[1] * t
        sL = amp * math.sin(w + forc[2])
        sR = amp * math.sin(w + forc[3])
        for i in range(3):
            gen[6 + i] += sL * forc[4 + i]
            gen[9 + i] += sR * forc[7 + i]
    return gen


@njit(cache=True)
def stage_rates(scal, inv, hbar, forc, t, R, G, x):
    """Returns ``(w (3,3), x_dot (18), G_dot (3))``; rows of ``w`` are w_B, w_L, w_R."""
    m = x[6:18]
    z = _velocities(scal, inv, R, m)
    gen = _loads(forc, t, z)
    v = z[0:3]
    wB = z[3:6]
    wL = z[6:9]
    wR = z[9:12]
    mT, g, mL, mR = scal[0], scal[1], scal[2], scal[3]
    r = x[3:6]
    p_lin = m[0:3]
    xd = np.empty(18)
    xd[0:3] = _mv(R[0], v)
    xd[3:6] = _cross(r, wB) + v
    xd[6:9] = _cross(p_lin, wB) - (mT * g) * G + gen[0:3]
    cL = _mv(R[1], hbar[0])
    cR = _mv(R[2], hbar[1])
    dl_dr = -(mT * g) * G
    dl_dG = -g * (mT * r + mL * cL + mR * cR)
    xd[9:12] = (
        _cross(m[3:6], wB) + _cross(p_lin, v) + _cross(dl_dr, r) + _cross(dl_dG, G) + gen[3:6]
    )
    muL = m[6:9]
    muR = m[9:12]
    xd[12:15] = (
        _cross(muL, wL + _mtv(R[1], wB))
        - (mL * g) * _cross(hbar[0], _mtv(R[1], G))
        + gen[6:9]
    )
    xd[15:18] = (
        _cross(muR, wR + _mtv(R[2], wB))
        - (mR * g) * _cross(hbar[1], _mtv(R[2], G))
        + gen[9:12]
    )
    w = np.empty((3, 3))
    w[0] = wB
    w[1] = wL
    w[2] = wR
    return w, xd, _cross(G, wB)


@njit(cache=True)
def _advance(R0, G0, th):
    R = np.empty((3, 3, 3))
    E0 = _exp(th[0])
    R[0] = _mm(R0[0], E0)
    R[1] = _mm(R0[1], _exp(th[1]))
    R[2] = _mm(R0[2], _exp(th[2]))
    return R, _mtv(E0, G0)


@njit(cache=True)
def mk4_step(scal, inv, hbar, forc, t, dt, R, G, x):
    w1, k1, _ = stage_rates(scal, inv, hbar, forc, t, R, G, x)
    th = 0.5 * dt * w1
    R2, G2 = _advance(R, G, th)
    w2, k2, _ = stage_rates(scal, inv, hbar, forc, t + 0.5 * dt, R2, G2, x + 0.5 * dt * k1)
    K2 = np.empty((3, 3))
    for i in range(3):
        K2[i] = _jr_inv_apply(th[i], w2[i])
    th = 0.5 * dt * K2
    R3, G3 = _advance(R, G, th)
    w3, k3, _ = stage_rates(scal, inv, hbar, forc, t + 0.5 * dt, R3, G3, x + 0.5 * dt * k2)
    K3 = np.empty((3, 3))
    for i in range(3):
        K3[i] = _jr_inv_apply(th[i], w3[i])
    th = dt * K3
    R4, G4 = _advance(R, G, th)
    w4, k4, _ = stage_rates(scal, inv, hbar, forc, t + dt, R4, G4, x + dt * k3)
    K4 = np.empty((3, 3))
    for i in range(3):
        K4[i] = _jr_inv_apply(th[i], w4[i])
    Rn, Gn = _advance(R, G, (dt / 6.0) * (w1 + 2.0 * K2 + 2.0 * K3 + K4))
    xn = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return Rn, Gn, xn


@njit(cache=True)
def _hat_stack(R, w):
    out = np.empty((3, 3, 3))
    for i in range(3):
        x, y, z = w[i, 0], w[i, 1], w[i, 2]
        H = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
        out[i] = _mm(R[i], H)
    return out


@njit(cache=True)
def rk4_project_step(scal, inv, hbar, forc, t, dt, R, G, x):
    w1, k1, g1 = stage_rates(scal, inv, hbar, forc, t, R, G, x)
    d1 = _hat_stack(R, w1)
    w2, k2, g2 = stage_rates(
        scal, inv, hbar, forc, t + 0.5 * dt, R + 0.5 * dt * d1, G + 0.5 * dt * g1, x + 0.5 * dt * k1
    )
    d2 = _hat_stack(R + 0.5 * dt * d1, w2)
    w3, k3, g3 = stage_rates(
        scal, inv, hbar, forc, t + 0.5 * dt, R + 0.5 * dt * d2, G + 0.5 * dt * g2, x + 0.5 * dt * k2
    )
    d3 = _hat_stack(R + 0.5 * dt * d2, w3)
    w4, k4, g4 = stage_rates(scal, inv, hbar, forc, t + dt, R + dt * d3, G + dt * g3, x + dt * k3)
    d4 = _hat_stack(R + dt * d3, w4)
    Rn = R + (dt / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
    Gn = G + (dt / 6.0) * (g1 + 2.0 * g2 + 2.0 * g3 + g4)
    xn = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out = np.empty((3, 3, 3))
    for i in range(3):
        U, _, Vt = np.linalg.svd(Rn[i])
        out[i] = U @ Vt
    return out, Gn / math.sqrt(Gn[0] * Gn[0] + Gn[1] * Gn[1] + Gn[2] * Gn[2]), xn


@njit(cache=True)
def _finite(R, G, x):
    for v in x:
        if not math.isfinite(v):
            return False
    for v in G:
        if not math.isfinite(v):
            return False
    for v in R.ravel():
        if not math.isfinite(v):
            return False
    return True


@njit(cache=True)
def run(scal, inv, hbar, forc, t0, dt, R, G, x, n_steps, record_every, method):
    """Integrate ``n_steps``; returns recorded ``(t, R, G, x, n_recorded, bad_step)``.

    ``method`` is 0 for MK4 and 1 for RK4Project. ``bad_step`` is -1 unless
    the state turned non-finite.
    """
    n_rec = n_steps // record_every + 1
    ts = np.empty(n_rec)
    Rs = np.empty((n_rec, 3, 3, 3))
    Gs = np.empty((n_rec, 3))
    xs = np.empty((n_rec, 18))
    ts[0] = t0
    Rs[0] = R
    Gs[0] = G
    xs[0] = x
    j = 1
    t = t0
    for k in range(1, n_steps + 1):
        if method == 0:
            R, G, x = mk4_step(scal, inv, hbar, forc, t, dt, R, G, x)
        else:
            R, G, x = rk4_project_step(scal, inv, hbar, forc, t, dt, R, G, x)
        t = t0 + k * dt
        if not _finite(R, G, x):
            return ts, Rs, Gs, xs, j, k
        if k % record_every == 0:
            ts[j] = t
            Rs[j] = R
            Gs[j] = G
            xs[j] = x
            j += 1
    return ts, Rs, Gs, xs, j, -1


def pack_params(p):
    scal = np.array([p.m_T, p.g, p.m_WL, p.m_WR])
    inv = np.stack(p.inv_inertias)
    hbar = np.stack([p.hbar_L, p.hbar_R])
    return scal, inv, hbar


def pack_forcing(gait=None, c_lin=0.0, c_rot=0.0):
    forc = np.zeros(12)
    if gait is not None and gait.active:
        forc[0:4] = gait.amplitude, gait.frequency, gait.phase_L, gait.phase_R
        forc[4:7] = gait.axis_L
        forc[7:10] = gait.axis_R
    forc[10] = c_lin
    forc[11] = c_rot
    return forc

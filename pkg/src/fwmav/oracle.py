"""Brute-force reference dynamics in full coordinates.

Nothing on the dynamics path reuses the reduced model. The Lagrangian is written from the
inertial kinematics of the three bodies and every derivative is a finite
difference of it, so agreement with :mod:`fwmav.dynamics` is evidence rather
than tautology.

Coordinates are exponential charts ``q = (theta_B, r_I, theta_L, theta_R)``
with ``R_BI = R_BI0 exp(theta_B)`` and ``R_WB = R_WB0 exp(theta_W)``. Charts are
re-centred once any rotation coordinate leaves the ball of radius 1.

Evaluation is vectorised over a leading batch axis so that the whole finite
difference stencil for many trajectories is one numpy call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .dynamics import ForceInputs, ReducedState, gait_torque
from .errors import ChartOverflow, NonFinite, SingularMass
from .model import (
    ReducedPose,
    ShapeConfig,
    VelocityZ,
    Wing,
    dl_dGamma,
    dl_dr,
    kinetic_energy,
    momenta,
    perturb_wing,
    reduced_lagrangian,
    shape_gradient,
)
from .so3 import E_Z, exp_so3, right_jacobian, skew_part_vee

FD_STEP = 1e-6
CHART_LIMIT = 0.5 * math.pi
RECENTER_AT = 1.0

_ROT = (slice(0, 3), slice(6, 9), slice(9, 12))


@dataclass(frozen=True, eq=False)
class Chart:
    """Reference rotations ``(R_BI0, R_WLB0, R_WRB0)`` of an exponential chart."""

    R_BI0: np.ndarray = field(default_factory=lambda: np.eye(3))
    R_WLB0: np.ndarray = field(default_factory=lambda: np.eye(3))
    R_WRB0: np.ndarray = field(default_factory=lambda: np.eye(3))

    def stack(self):
        return np.stack([self.R_BI0, self.R_WLB0, self.R_WRB0])


def _check_chart(q):
    for sl in _ROT:
        n = np.linalg.norm(q[..., sl], axis=-1)
        if np.any(n >= CHART_LIMIT):
            raise ChartOverflow(f"chart coordinate norm {float(np.max(n)):.3f} >= pi/2")


def _poses(R0, q):
    """``(R_BI, R_WLB, R_WRB)`` for a batch of chart points."""
    RB = R0[..., 0, :, :] @ exp_so3(q[..., 0:3])
    RL = R0[..., 1, :, :] @ exp_so3(q[..., 6:9])
    RR = R0[..., 2, :, :] @ exp_so3(q[..., 9:12])
    return RB, RL, RR


@njit(cache=True, inline="always")
def _exp_jac(q, off, S, k):
    """Write ``exp(th)`` into ``S[k]`` and ``J_r(th)`` into ``S[k + 1]``, ``th = q[off:off+3]``."""
    x, y, z = q[off], q[off + 1], q[off + 2]
    t2 = x * x + y * y + z * z
    if t2 < 1e-8:
        a = 1.0 - t2 / 6.0
        b = 0.5 - t2 / 24.0
        c = 1.0 / 6.0 - t2 / 120.0
    else:
        t = math.sqrt(t2)
        a = math.sin(t) / t
        b = (1.0 - math.cos(t)) / t2
        c = (t - math.sin(t)) / (t2 * t)
    # K = hat(th), K^2 = th th^T - t2 I
    K01, K02, K12 = -z, y, -x
    for i, ti in ((0, x), (1, y), (2, z)):
        for j, tj in ((0, x), (1, y), (2, z)):
            kk = ti * tj - (t2 if i == j else 0.0)
            S[k, i, j] = (1.0 if i == j else 0.0) + b * kk
            S[k + 1, i, j] = (1.0 if i == j else 0.0) + c * kk
    S[k, 0, 1] += a * K01
    S[k, 1, 0] -= a * K01
    S[k, 0, 2] += a * K02
    S[k, 2, 0] -= a * K02
    S[k, 1, 2] += a * K12
    S[k, 2, 1] -= a * K12
    S[k + 1, 0, 1] -= b * K01
    S[k + 1, 1, 0] += b * K01
    S[k + 1, 0, 2] -= b * K02
    S[k + 1, 2, 0] += b * K02
    S[k + 1, 1, 2] -= b * K12
    S[k + 1, 2, 1] += b * K12


@njit(cache=True, inline="always")
def _mul(A, i, B, j, C, k):
    """``C[k] = A[i] @ B[j]`` on stacks of 3x3 matrices."""
    for r in range(3):
        for c in range(3):
            C[k, r, c] = A[i, r, 0] * B[j, 0, c] + A[i, r, 1] * B[j, 1, c] + A[i, r, 2] * B[j, 2, c]


@njit(cache=True)
def _pose(R0, q, masses, hbar, up, P, S):
    """Fill ``P`` with the configuration-only quantities at chart point ``q``.

    ``P[0:3]`` are the inertial attitudes of torso, left and right wing and
    ``P[3:6]`` the maps from chart rates to their inertial angular velocity
    contributions. Returns the potential energy.
    """
    _exp_jac(q, 0, S, 0)
    _exp_jac(q, 6, S, 2)
    _exp_jac(q, 9, S, 4)
    _mul(R0, 0, S, 0, P, 0)  # R_BI
    _mul(R0, 1, S, 2, S, 6)  # R_WLB
    _mul(R0, 2, S, 4, S, 7)  # R_WRB
    _mul(P, 0, S, 6, P, 1)  # R_BI R_WLB
    _mul(P, 0, S, 7, P, 2)
    _mul(P, 0, S, 1, P, 3)
    _mul(P, 1, S, 3, P, 4)
    _mul(P, 2, S, 5, P, 5)
    m_L, m_R, g = masses[1], masses[2], masses[3]
    m_T = masses[0] + m_L + m_R
    V = m_T * (q[3] * up[0] + q[4] * up[1] + q[5] * up[2])
    for k, m, w in ((1, m_L, 0), (2, m_R, 1)):
        for i in range(3):
            V += m * up[i] * (P[k, i, 0] * hbar[w, 0] + P[k, i, 1] * hbar[w, 1] + P[k, i, 2] * hbar[w, 2])
    return g * V


@njit(cache=True)
def _kinetic(P, qd, inertia, m_T):
    """Kinetic energy for chart rates ``qd`` given the pose data ``P``."""
    T = 0.5 * m_T * (qd[3] * qd[3] + qd[4] * qd[4] + qd[5] * qd[5])
    WB0 = P[3, 0, 0] * qd[0] + P[3, 0, 1] * qd[1] + P[3, 0, 2] * qd[2]
    WB1 = P[3, 1, 0] * qd[0] + P[3, 1, 1] * qd[1] + P[3, 1, 2] * qd[2]
    WB2 = P[3, 2, 0] * qd[0] + P[3, 2, 1] * qd[1] + P[3, 2, 2] * qd[2]
    for k, off in ((0, -1), (1, 6), (2, 9)):
        W0, W1, W2 = WB0, WB1, WB2
        if off >= 0:
            W0 += P[3 + k, 0, 0] * qd[off] + P[3 + k, 0, 1] * qd[off + 1] + P[3 + k, 0, 2] * qd[off + 2]
            W1 += P[3 + k, 1, 0] * qd[off] + P[3 + k, 1, 1] * qd[off + 1] + P[3 + k, 1, 2] * qd[off + 2]
            W2 += P[3 + k, 2, 0] * qd[off] + P[3 + k, 2, 1] * qd[off + 1] + P[3 + k, 2, 2] * qd[off + 2]
        # angular velocity in the body's own frame
        b0 = P[k, 0, 0] * W0 + P[k, 1, 0] * W1 + P[k, 2, 0] * W2
        b1 = P[k, 0, 1] * W0 + P[k, 1, 1] * W1 + P[k, 2, 1] * W2
        b2 = P[k, 0, 2] * W0 + P[k, 1, 2] * W1 + P[k, 2, 2] * W2
        I = inertia[k]
        T += 0.5 * (
            b0 * (I[0, 0] * b0 + I[0, 1] * b1 + I[0, 2] * b2)
            + b1 * (I[1, 0] * b0 + I[1, 1] * b1 + I[1, 2] * b2)
            + b2 * (I[2, 0] * b0 + I[2, 1] * b1 + I[2, 2] * b2)
        )
    return T


@njit(cache=True)
def _lagrangian_points(R0, Q, Qd, masses, inertia, hbar, up):
    """``T - V`` at ``Q[n, k], Qd[n, k]`` with chart references ``R0[n]``.

    ``masses = (m_B, m_WL, m_WR, g)``; ``inertia`` stacks torso and wing
    inertias about their frame origins; ``hbar`` the two wing COM offsets.
    """
    n, m = Q.shape[0], Q.shape[1]
    out = np.empty((n, m))
    P = np.empty((6, 3, 3))
    S = np.empty((8, 3, 3))
    m_T = masses[0] + masses[1] + masses[2]
    for i in range(n):
        for k in range(m):
            V = _pose(R0[i], Q[i, k], masses, hbar, up, P, S)
            out[i, k] = _kinetic(P, Qd[i, k], inertia, m_T) - V
    return out


@njit(cache=True, inline="always")
def _stencil(R0, q, qd, h, masses, inertia, hbar, up):
    """Finite-difference pieces of the Euler-Lagrange equations for one state.

    Returns ``(dL/dq, A, mixed)`` where ``A = d2L/dqd2`` by polarization with
    unit velocity steps (exact for a quadratic form) and ``mixed`` is
    ``(d2L/dq dqd) qd`` as a central difference of momenta along ``qd``.
    Configuration-only work is shared between points with the same ``q``.
    """
    P = np.empty((6, 3, 3))
    S = np.empty((8, 3, 3))
    m_T = masses[0] + masses[1] + masses[2]
    dq = np.empty(12)
    A = np.empty((12, 12))
    mixed = np.zeros(12)
    x = q.copy()
    for i in range(12):
        x[i] = q[i] + h
        Vp = _pose(R0, x, masses, hbar, up, P, S)
        lp = _kinetic(P, qd, inertia, m_T) - Vp
        x[i] = q[i] - h
        Vm = _pose(R0, x, masses, hbar, up, P, S)
        lm = _kinetic(P, qd, inertia, m_T) - Vm
        x[i] = q[i]
        dq[i] = (lp - lm) / (2.0 * h)

    # kinetic form at q; the potential cancels in the polarization identity
    _pose(R0, q, masses, hbar, up, P, S)
    u = np.zeros(12)
    Ti = np.empty(12)
    for i in range(12):
        u[i] = 1.0
        Ti[i] = _kinetic(P, u, inertia, m_T)
        u[i] = 0.0
    for i in range(12):
        A[i, i] = 2.0 * Ti[i]
        u[i] = 1.0
        for j in range(i + 1, 12):
            u[j] = 1.0
            A[i, j] = _kinetic(P, u, inertia, m_T) - Ti[i] - Ti[j]
            A[j, i] = A[i, j]
            u[j] = 0.0
        u[i] = 0.0

    scale = 1.0
    for i in range(12):
        scale = max(scale, abs(qd[i]))
    hd = h / scale
    u[:] = qd
    for sgn in (1.0, -1.0):
        for j in range(12):
            x[j] = q[j] + sgn * hd * qd[j]
        _pose(R0, x, masses, hbar, up, P, S)
        for i in range(12):
            u[i] = qd[i] + 1.0
            lp = _kinetic(P, u, inertia, m_T)
            u[i] = qd[i] - 1.0
            lm = _kinetic(P, u, inertia, m_T)
            u[i] = qd[i]
            mixed[i] += sgn * 0.5 * (lp - lm)
    for i in range(12):
        mixed[i] /= 2.0 * hd
    return dq, A, mixed


@njit(cache=True)
def _stencil_batch(R0, q, qd, h, masses, inertia, hbar, up):
    """``(b, A)`` of ``A qdd = b`` (without loads) for every state in the batch."""
    n = q.shape[0]
    b = np.empty((n, 12))
    A = np.empty((n, 12, 12))
    for i in range(n):
        dq, A[i], mixed = _stencil(R0[i], q[i], qd[i], h, masses, inertia, hbar, up)
        b[i] = dq - mixed
    return b, A


def _lagrangian_batch(p, R0, q, qd, up=None):
    """``T - V`` for chart points ``q, qd`` of shape ``(n, k, 12)`` and ``R0`` of ``(n, 3, 3, 3)``."""
    return _lagrangian_points(
        np.ascontiguousarray(R0, dtype=float),
        np.ascontiguousarray(q, dtype=float),
        np.ascontiguousarray(qd, dtype=float),
        *_packed(p, up),
    )


def full_lagrangian(p, chart, q, qdot, up=None):
    """Unreduced Lagrangian ``T - V`` at chart point ``(q, qdot)``.

    ``up`` is the inertial direction in which heights are measured (default
    ``e_z``); rotating it together with the pose leaves ``L`` unchanged.
    """
    q = np.asarray(q, float)
    qdot = np.asarray(qdot, float)
    _check_chart(q)
    return float(_lagrangian_batch(p, chart.stack()[None], q[None, None], qdot[None, None], up)[0, 0])


@njit(cache=True, inline="always")
def _rotations(R0, q, S, out):
    """``out[0:3] = (R_BI, R_WLB, R_WRB)`` at chart point ``q``."""
    _exp_jac(q, 0, S, 0)
    _exp_jac(q, 6, S, 2)
    _exp_jac(q, 9, S, 4)
    _mul(R0, 0, S, 0, out, 0)
    _mul(R0, 1, S, 2, out, 1)
    _mul(R0, 2, S, 4, out, 2)


@njit(cache=True)
def _velocity_jacobian(R0, q, h):
    """``d(v, w_B, w_L, w_R)/d qdot`` for each chart point by central differences of the pose map."""
    n = q.shape[0]
    J = np.zeros((n, 12, 12))
    S = np.empty((8, 3, 3))
    Rc = np.empty((3, 3, 3))
    Rp = np.empty((3, 3, 3))
    Rm = np.empty((3, 3, 3))
    G = np.empty((3, 3))
    x = np.empty(12)
    for i in range(n):
        x[:] = q[i]
        _rotations(R0[i], x, S, Rc)
        # v = R_BI^T dr_I/dt
        for r in range(3):
            for c in range(3):
                J[i, r, 3 + c] = Rc[0, c, r]
        for k in range(12):
            x[k] = q[i, k] + h
            _rotations(R0[i], x, S, Rp)
            x[k] = q[i, k] - h
            _rotations(R0[i], x, S, Rm)
            x[k] = q[i, k]
            for b in range(3):
                # R^T dR/dq_k is skew up to O(h^2)
                for r in range(3):
                    for c in range(3):
                        acc = 0.0
                        for m in range(3):
                            acc += Rc[b, m, r] * (Rp[b, m, c] - Rm[b, m, c])
                        G[r, c] = acc / (2.0 * h)
                J[i, 3 + 3 * b, k] = 0.5 * (G[2, 1] - G[1, 2])
                J[i, 4 + 3 * b, k] = 0.5 * (G[0, 2] - G[2, 0])
                J[i, 5 + 3 * b, k] = 0.5 * (G[1, 0] - G[0, 1])
    return J


def _packed(p, up=None):
    return (
        np.array([p.m_B, p.m_WL, p.m_WR, p.g]),
        np.stack([p.I_B, p.I_WL, p.I_WR]),
        np.stack([p.hbar_L, p.hbar_R]),
        E_Z if up is None else np.asarray(up, float),
    )


def _accel_batch(p, R0, q, qd, loads=None):
    """Euler-Lagrange accelerations for ``n`` chart states at once.

    ``A qdd = dL/dq - (d2L/dq dqd) qd + J^T f`` with every derivative of ``L``
    taken by finite differences (see ``_stencil``).
    """
    b, A = _stencil_batch(
        np.ascontiguousarray(R0), np.ascontiguousarray(q), np.ascontiguousarray(qd), FD_STEP, *_packed(p)
    )
    if loads is not None:
        rows = np.flatnonzero(np.any(loads != 0.0, axis=1))
        if rows.size:
            J = _velocity_jacobian(np.ascontiguousarray(R0[rows]), np.ascontiguousarray(q[rows]), FD_STEP)
            b[rows] += np.einsum("nji,nj->ni", J, loads[rows])
    try:
        return np.linalg.solve(A, b[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularMass(f"oracle kinetic form is singular: {exc}") from exc


def oracle_accel(p, chart, q, qdot, generalized_forces=None):
    """``qddot`` from the Euler-Lagrange equations of the unreduced system.

    ``generalized_forces`` is a :class:`ForceInputs` (or its 12-vector
    :meth:`~ForceInputs.generalized` form) in body and wing frames.
    """
    q = np.asarray(q, float)
    qdot = np.asarray(qdot, float)
    _check_chart(q)
    loads = None
    if generalized_forces is not None:
        f = generalized_forces
        loads = (f.generalized() if isinstance(f, ForceInputs) else np.asarray(f, float))[None]
    return _accel_batch(p, chart.stack()[None], q[None], qdot[None], loads)[0]


# --- matched states -------------------------------------------------------


def chart_from_state(st):
    """Chart centred on ``st`` with ``q`` and ``qdot`` giving the same motion."""
    z = st.z
    chart = Chart(st.R_BI, st.shape.R_WLB, st.shape.R_WRB)
    q = np.concatenate([np.zeros(3), st.r_I, np.zeros(6)])
    qdot = np.concatenate([z.w_B, st.R_BI @ z.v, z.w_L, z.w_R])
    return chart, q, qdot


def _physical(R0, q, qd):
    """Rotations, position and body velocities for batched chart states."""
    RB, RL, RR = _poses(R0, q)
    wB = np.einsum("...ij,...j->...i", right_jacobian(q[..., 0:3]), qd[..., 0:3])
    wL = np.einsum("...ij,...j->...i", right_jacobian(q[..., 6:9]), qd[..., 6:9])
    wR = np.einsum("...ij,...j->...i", right_jacobian(q[..., 9:12]), qd[..., 9:12])
    v = np.einsum("...ji,...j->...i", RB, qd[..., 3:6])
    return RB, RL, RR, q[..., 3:6].copy(), np.concatenate([v, wB, wL, wR], axis=-1)


def state_from_chart(chart, q, qdot, t=0.0):
    RB, RL, RR, rI, z = _physical(chart.stack(), np.asarray(q, float), np.asarray(qdot, float))
    return ReducedState.from_inertial(RB, rI, ShapeConfig(RL, RR), VelocityZ.from_vector(z), t)


def _recenter(R0, q, qd):
    """Move the chart origin to the current point where a block exceeds ``RECENTER_AT``.

    Keeps the physical state: ``R0 <- R0 exp(theta)``, ``theta <- 0`` and the
    rate becomes the body angular velocity ``J_r(theta) thetadot``. Returns a
    per-state flag of whether anything moved.
    """
    moved = np.zeros(q.shape[0], dtype=bool)
    for k, sl in enumerate(_ROT):
        th = q[:, sl]
        far = np.linalg.norm(th, axis=1) > RECENTER_AT
        if not np.any(far):
            continue
        R0[far, k] = R0[far, k] @ exp_so3(th[far])
        qd[far, sl] = np.einsum("nij,nj->ni", right_jacobian(th[far]), qd[far, sl])
        q[far, sl] = 0.0
        moved |= far
    return moved


class OracleTrajectory:
    """Samples of an oracle run, in the same physical quantities as :class:`Trajectory`."""

    def __init__(self, p, t, R_BI, R_WLB, R_WRB, r_I, z, recenterings):
        self.p = p
        self.t = t
        self.R_BI = R_BI
        self.R_WLB = R_WLB
        self.R_WRB = R_WRB
        self.r_I = r_I
        self.z = z
        self.recenterings = recenterings
        self.energy, self.pi_z = _oracle_diagnostics(p, R_BI, R_WLB, R_WRB, r_I, z)

    def __len__(self):
        return len(self.t)

    @staticmethod
    def _drift(series):
        ref = abs(series[0])
        dev = float(np.max(np.abs(series - series[0])))
        return dev / ref if ref > 0.0 else dev

    def energy_drift_rel(self):
        return self._drift(self.energy)

    def pi_z_drift_rel(self):
        return self._drift(self.pi_z)


def _oracle_diagnostics(p, RB, RL, RR, rI, z):
    """Energy and vertical angular momentum from inertial quantities.

    Both follow the same Lagrangian as :func:`full_lagrangian`: wing inertias
    are taken about the hinge and the offsets enter only through heights.
    """
    v, wB, wL, wR = z[:, 0:3], z[:, 3:6], z[:, 6:9], z[:, 9:12]
    rd = np.einsum("nij,nj->ni", RB, v)
    RLI = RB @ RL
    RRI = RB @ RR
    WB = np.einsum("nij,nj->ni", RB, wB)
    WL = WB + np.einsum("nij,nj->ni", RLI, wL)
    WR = WB + np.einsum("nij,nj->ni", RRI, wR)
    T = 0.5 * p.m_T * np.einsum("ni,ni->n", rd, rd)
    H = p.m_T * np.cross(rI, rd)
    for R, I, W in ((RB, p.I_B, WB), (RLI, p.I_WL, WL), (RRI, p.I_WR, WR)):
        h = np.einsum("nij,jk,nlk,nl->ni", R, I, R, W)
        T = T + 0.5 * np.einsum("ni,ni->n", W, h)
        H = H + h
    V = p.g * (
        p.m_T * rI[:, 2]
        + p.m_WL * np.einsum("nij,j->ni", RLI, p.hbar_L)[:, 2]
        + p.m_WR * np.einsum("nij,j->ni", RRI, p.hbar_R)[:, 2]
    )
    return T + V, H[:, 2]


def _as_list(x, n):
    if isinstance(x, (list, tuple)):
        if len(x) != n:
            raise ValueError(f"expected {n} entries, got {len(x)}")
        return list(x)
    return [x] * n


def oracle_simulate_many(p, states, gait=None, provider=None, dt=1e-4, duration=0.5, record_every=1):
    """RK4 on ``(q, qdot)`` for several initial states in lockstep.

    ``gait`` and ``provider`` may each be one object or a per-state list.
    """
    n = len(states)
    gaits = _as_list(gait, n)
    providers = _as_list(provider, n)
    if duration < 0:
        raise ValueError("duration must be non-negative")
    steps = 0 if duration == 0 else max(1, math.ceil(duration / dt - 1e-9))
    R0 = np.empty((n, 3, 3, 3))
    q = np.empty((n, 12))
    qd = np.empty((n, 12))
    t0 = states[0].t
    for i, st in enumerate(states):
        c, q[i], qd[i] = chart_from_state(st)
        R0[i] = c.stack()
    forced = any(g is not None and g.active for g in gaits) or any(pr is not None for pr in providers)

    def loads(t, R0, q, qd):
        if not forced:
            return None
        out = np.zeros((n, 12))
        need_state = any(pr is not None for pr in providers)
        if need_state:
            RB, RL, RR, rI, z = _physical(R0, q, qd)
        for i in range(n):
            if providers[i] is not None:
                st = _loose_state(RB[i], RL[i], RR[i], rI[i], z[i], t)
                out[i] += providers[i](st).generalized()
            g = gaits[i]
            if g is not None and g.active:
                TL, TR = gait_torque(g, t)
                out[i, 6:9] += TL
                out[i, 9:12] += TR
        return out

    def acc(t, q, qd):
        return _accel_batch(p, R0, q, qd, loads(t, R0, q, qd))

    rec = [_physical(R0, q, qd)]
    ts = [t0]
    recenterings = np.zeros(n, dtype=int)
    for k in range(steps):
        t = t0 + k * dt
        k1v, k1a = qd, acc(t, q, qd)
        k2v = qd + 0.5 * dt * k1a
        k2a = acc(t + 0.5 * dt, q + 0.5 * dt * k1v, k2v)
        k3v = qd + 0.5 * dt * k2a
        k3a = acc(t + 0.5 * dt, q + 0.5 * dt * k2v, k3v)
        k4v = qd + dt * k3a
        k4a = acc(t + dt, q + dt * k3v, k4v)
        q = q + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        qd = qd + dt / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a)
        if not np.all(np.isfinite(q)) or not np.all(np.isfinite(qd)):
            raise NonFinite("oracle state became non-finite", k + 1)
        recenterings += _recenter(R0, q, qd)
        _check_chart(q)
        if (k + 1) % record_every == 0:
            rec.append(_physical(R0, q, qd))
            ts.append(t0 + (k + 1) * dt)

    ts = np.array(ts)
    out = []
    for i in range(n):
        parts = [np.stack([r[j][i] for r in rec]) for j in range(5)]
        out.append(OracleTrajectory(p, ts, parts[0], parts[1], parts[2], parts[3], parts[4], int(recenterings[i])))
    return out


def oracle_simulate(p, st0, gait=None, provider=None, dt=1e-4, duration=0.5, record_every=1):
    return oracle_simulate_many(p, [st0], gait, provider, dt, duration, record_every)[0]


def _loose_state(RB, RL, RR, rI, z, t):
    # RK4 stages are exact rotations here (chart coordinates), so validation passes.
    return ReducedState.from_inertial(RB, rI, ShapeConfig(RL, RR), VelocityZ.from_vector(z), t)


# --- comparison -------------------------------------------------------------

STATE_COMPONENTS = (
    [f"r_I[{i}]" for i in range(3)]
    + [f"R_BI[{i}{j}]" for i in range(3) for j in range(3)]
    + [f"R_WLB[{i}{j}]" for i in range(3) for j in range(3)]
    + [f"R_WRB[{i}{j}]" for i in range(3) for j in range(3)]
    + [f"{b}[{i}]" for b in ("v", "w_B", "w_L", "w_R") for i in range(3)]
)


def _state_matrix(n, r_I, R_BI, R_WLB, R_WRB, z):
    return np.concatenate(
        [r_I, R_BI.reshape(n, 9), R_WLB.reshape(n, 9), R_WRB.reshape(n, 9), z], axis=1
    )


@dataclass
class Comparison:
    t: np.ndarray
    errors: np.ndarray  # (samples, components) absolute differences
    scale: float

    @property
    def rel_series(self):
        return self.errors / self.scale

    @property
    def max_rel(self):
        return float(np.max(self.errors)) / self.scale if self.errors.size else 0.0

    def worst(self):
        """``(component name, time)`` of the largest discrepancy."""
        i, j = np.unravel_index(int(np.argmax(self.errors)), self.errors.shape)
        return STATE_COMPONENTS[j], float(self.t[i])


def compare(reduced, oracle):
    """Componentwise state error between a reduced and an oracle trajectory.

    The relative error is ``max |x_red - x_orc| / max(1, max |x_orc|)``.
    """
    n = len(oracle.t)
    if len(reduced.t) != n or np.max(np.abs(reduced.t - oracle.t)) > 1e-9:
        raise ValueError("trajectories are sampled at different times")
    a = _state_matrix(n, reduced.r_I, reduced.R_BI, reduced.R_WLB, reduced.R_WRB, reduced.z)
    b = _state_matrix(n, oracle.r_I, oracle.R_BI, oracle.R_WLB, oracle.R_WRB, oracle.z)
    return Comparison(oracle.t, np.abs(a - b), max(1.0, float(np.max(np.abs(b)))))


# --- finite-difference certification ---------------------------------------


def fd_check(f, x, analytic, step=FD_STEP):
    """Max relative error of ``analytic`` against central differences of ``f`` at ``x``.

    The denominator is ``max(1, |analytic|_inf)``.
    """
    x = np.asarray(x, float)
    analytic = np.asarray(analytic, float)
    fd = np.empty_like(analytic)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = step
        fd.flat[i] = (f(x + e) - f(x - e)) / (2.0 * step)
    return float(np.max(np.abs(fd - analytic)) / max(1.0, float(np.max(np.abs(analytic)))))


def _free_pose(r, Gamma, shape):
    # ReducedPose insists on a unit Gamma; differencing needs to step off the sphere.
    pose = object.__new__(ReducedPose)
    object.__setattr__(pose, "r", np.asarray(r, float))
    object.__setattr__(pose, "Gamma", np.asarray(Gamma, float))
    object.__setattr__(pose, "shape", shape)
    return pose


def gradient_errors(p, pose, z, step=FD_STEP):
    """:func:`fd_check` of every analytic partial of the reduced Lagrangian at one point."""
    zv = z.as_vector()
    s = pose.shape
    out = {
        "momenta": fd_check(
            lambda x: kinetic_energy(p, s, VelocityZ.from_vector(x)), zv, np.concatenate(momenta(p, s, z)), step
        ),
        "dl_dr": fd_check(
            lambda x: reduced_lagrangian(p, _free_pose(x, pose.Gamma, s), z), pose.r, dl_dr(p, pose), step
        ),
        "dl_dGamma": fd_check(
            lambda x: reduced_lagrangian(p, _free_pose(pose.r, x, s), z), pose.Gamma, dl_dGamma(p, pose), step
        ),
    }
    for wing in Wing:
        out[f"shape_gradient_{wing.value}"] = fd_check(
            lambda eta, w=wing: reduced_lagrangian(p, perturb_wing(pose, w, eta), z),
            np.zeros(3),
            shape_gradient(p, pose, z, wing),
            step,
        )
    return out

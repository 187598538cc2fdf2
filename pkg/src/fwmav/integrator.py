"""Fixed-step integration of the reduced dynamics and trajectory recording.

Two methods are available:

``MK4``
    Classical four-stage Runge-Kutta-Munthe-Kaas. Rotations are advanced as
    ``R0 @ exp(theta)`` with stage increments mapped through the inverse right
    Jacobian; ``Gamma`` is transported by the torso increment so it stays on
    the unit sphere. Vector parts use the ordinary RK4 tableau.
``RK4Project``
    Plain RK4 on matrix entries followed by projection onto SO(3) and
    renormalization of ``Gamma``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dynamics import (
    ForceInputs,
    LinearDamping,
    ReducedState,
    ZeroForces,
    _rates,
    _solve_blocks,
    gait_torque,
)
from .errors import NonFinite
from .model import ReducedPose, ShapeConfig, VelocityZ, kinetic_energy, momenta
from .so3 import E_Z, cross, exp_so3, hat, project_so3, right_jacobian_inv


class Method(str, enum.Enum):
    MK4 = "MK4"
    RK4_PROJECT = "RK4Project"


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-4
    method: Method = Method.MK4
    record_every: int = 1

    def __post_init__(self):
        dt = float(self.dt)
        if not (0.0 < dt <= 0.1):
            raise ValueError(f"dt must lie in (0, 0.1], got {dt}")
        object.__setattr__(self, "dt", dt)
        object.__setattr__(self, "method", Method(self.method))
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError("record_every must be a positive integer")
        object.__setattr__(self, "record_every", int(self.record_every))


def _unchecked(cls, **fields):
    obj = object.__new__(cls)
    for k, v in fields.items():
        object.__setattr__(obj, k, v)
    return obj


class _Flat:
    """Raw arrays of one state, used inside the stepping loop."""

    __slots__ = ("t", "R_BI", "R_L", "R_R", "Gamma", "x")

    # x = (r_I, r, momenta) -> 18 numbers
    def __init__(self, t, R_BI, R_L, R_R, Gamma, x):
        self.t = t
        self.R_BI = R_BI
        self.R_L = R_L
        self.R_R = R_R
        self.Gamma = Gamma
        self.x = x

    @classmethod
    def from_state(cls, p, st):
        s = st.shape
        m = np.concatenate(momenta(p, s, st.z))
        x = np.concatenate([st.r_I, st.pose.r, m])
        return cls(st.t, st.R_BI, s.R_WLB, s.R_WRB, st.pose.Gamma, x)

    def velocities(self, p):
        return np.concatenate(_solve_blocks(p, self.R_L, self.R_R, self.x[6:18]))

    def to_state(self, p):
        z = VelocityZ.from_vector(self.velocities(p))
        shape = ShapeConfig(self.R_L, self.R_R)
        pose = ReducedPose(self.x[3:6], self.Gamma, shape)
        return ReducedState(pose, z, self.R_BI, self.x[0:3], self.t)

    def stage_state(self, p):
        """Like :meth:`to_state` but skips validation: RK4 stages sit slightly off SO(3)."""
        z = _unchecked(VelocityZ, **dict(zip(("v", "w_B", "w_L", "w_R"), _solve_blocks(p, self.R_L, self.R_R, self.x[6:18]))))
        shape = _unchecked(ShapeConfig, R_WLB=self.R_L, R_WRB=self.R_R)
        pose = _unchecked(ReducedPose, r=self.x[3:6], Gamma=self.Gamma, shape=shape)
        return _unchecked(ReducedState, pose=pose, z=z, R_BI=self.R_BI, r_I=self.x[0:3], t=self.t)

    def finite(self):
        return bool(
            np.all(np.isfinite(self.x))
            and np.all(np.isfinite(self.R_BI))
            and np.all(np.isfinite(self.R_L))
            and np.all(np.isfinite(self.R_R))
            and np.all(np.isfinite(self.Gamma))
        )


class _Forcing:
    """Evaluates the 12 generalized loads at a stage."""

    def __init__(self, p, provider, gait):
        self.p = p
        self.provider = None if provider is None or isinstance(provider, ZeroForces) else provider
        self.gait = gait if gait is not None and gait.active else None

    def __call__(self, y):
        if self.provider is None:
            gen = np.zeros(12)
        else:
            gen = self.provider(y.stage_state(self.p)).generalized()
        if self.gait is not None:
            TL, TR = gait_torque(self.gait, y.t)
            gen[6:9] += TL
            gen[9:12] += TR
        return gen


def _deriv(p, y, forcing):
    """``(w_B, w_L, w_R, x_dot, Gamma_dot)`` at stage state ``y``."""
    v, w_B, w_L, w_R, m_dot, r_dot, G_dot = _rates(
        p, y.R_L, y.R_R, y.x[3:6], y.Gamma, y.x[6:18], forcing(y)
    )
    x_dot = np.empty(18)
    x_dot[0:3] = y.R_BI @ v
    x_dot[3:6] = r_dot
    x_dot[6:18] = m_dot
    return w_B, w_L, w_R, x_dot, G_dot


def _mk4_step(p, y, dt, forcing):
    R0 = (y.R_BI, y.R_L, y.R_R)
    t0 = y.t
    k1 = _deriv(p, y, forcing)
    K1 = k1[0:3]
    th = [0.5 * dt * w for w in K1]
    E = [exp_so3(a) for a in th]
    y2 = _Flat(t0 + 0.5 * dt, R0[0] @ E[0], R0[1] @ E[1], R0[2] @ E[2], E[0].T @ y.Gamma, y.x + 0.5 * dt * k1[3])
    k2 = _deriv(p, y2, forcing)
    K2 = [right_jacobian_inv(a) @ w for a, w in zip(th, k2[0:3])]
    th = [0.5 * dt * w for w in K2]
    E = [exp_so3(a) for a in th]
    y3 = _Flat(t0 + 0.5 * dt, R0[0] @ E[0], R0[1] @ E[1], R0[2] @ E[2], E[0].T @ y.Gamma, y.x + 0.5 * dt * k2[3])
    k3 = _deriv(p, y3, forcing)
    K3 = [right_jacobian_inv(a) @ w for a, w in zip(th, k3[0:3])]
    th = [dt * w for w in K3]
    E = [exp_so3(a) for a in th]
    y4 = _Flat(t0 + dt, R0[0] @ E[0], R0[1] @ E[1], R0[2] @ E[2], E[0].T @ y.Gamma, y.x + dt * k3[3])
    k4 = _deriv(p, y4, forcing)
    K4 = [right_jacobian_inv(a) @ w for a, w in zip(th, k4[0:3])]
    E = [exp_so3((dt / 6.0) * (a + 2.0 * b + 2.0 * c + d)) for a, b, c, d in zip(K1, K2, K3, K4)]
    x = y.x + (dt / 6.0) * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
    return _Flat(t0 + dt, R0[0] @ E[0], R0[1] @ E[1], R0[2] @ E[2], E[0].T @ y.Gamma, x)


def _rk4_raw_rates(p, y, forcing):
    w_B, w_L, w_R, x_dot, G_dot = _deriv(p, y, forcing)
    return y.R_BI @ hat(w_B), y.R_L @ hat(w_L), y.R_R @ hat(w_R), G_dot, x_dot


def _rk4_project_step(p, y, dt, forcing):
    t0 = y.t

    def shifted(k, h, t):
        return _Flat(t, y.R_BI + h * k[0], y.R_L + h * k[1], y.R_R + h * k[2], y.Gamma + h * k[3], y.x + h * k[4])

    k1 = _rk4_raw_rates(p, y, forcing)
    k2 = _rk4_raw_rates(p, shifted(k1, 0.5 * dt, t0 + 0.5 * dt), forcing)
    k3 = _rk4_raw_rates(p, shifted(k2, 0.5 * dt, t0 + 0.5 * dt), forcing)
    k4 = _rk4_raw_rates(p, shifted(k3, dt, t0 + dt), forcing)
    comb = [(dt / 6.0) * (a + 2.0 * b + 2.0 * c + d) for a, b, c, d in zip(k1, k2, k3, k4)]
    G = y.Gamma + comb[3]
    return _Flat(
        t0 + dt,
        project_so3(y.R_BI + comb[0]),
        project_so3(y.R_L + comb[1]),
        project_so3(y.R_R + comb[2]),
        G / np.linalg.norm(G),
        y.x + comb[4],
    )


_STEPPERS = {Method.MK4: _mk4_step, Method.RK4_PROJECT: _rk4_project_step}


def step(p, st, provider=None, gait=None, cfg=IntegratorConfig()):
    """Advance ``st`` by one step of ``cfg.dt``."""
    forcing = _Forcing(p, provider, gait)
    y = _STEPPERS[cfg.method](p, _Flat.from_state(p, st), cfg.dt, forcing)
    if not y.finite():
        raise NonFinite("state became non-finite", step=1)
    return y.to_state(p)


def spatial_momenta(p, st):
    """Inertial-frame linear and angular (about the inertial origin) momentum."""
    p_lin, pi_B, _, _ = momenta(p, st.shape, st.z)
    P = st.R_BI @ p_lin
    H = st.R_BI @ pi_B + cross(st.r_I, P)
    return P, H


def inertial_potential(p, st):
    """Potential from inertial heights of the three centres of mass."""
    R = st.R_BI
    s = st.shape
    h = p.m_T * st.r_I[2]
    h += p.m_WL * (R @ (s.R_WLB @ p.hbar_L))[2]
    h += p.m_WR * (R @ (s.R_WRB @ p.hbar_R))[2]
    return p.g * h


def diagnostics(p, st):
    """``(E, pi_z, gamma_err)`` for one state."""
    E = kinetic_energy(p, st.shape, st.z) + inertial_potential(p, st)
    _, H = spatial_momenta(p, st)
    gamma_err = float(np.linalg.norm(st.pose.Gamma - st.R_BI.T @ E_Z))
    return E, float(H[2]), gamma_err


def _velocity_arrays(p, R_L, R_R, m):
    """Vectorized block solve of ``M z = m`` over a leading sample axis."""
    IBi, ILi, IRi = p.inv_inertias
    mu_L, mu_R = m[:, 6:9], m[:, 9:12]
    w_B = (m[:, 3:6] - np.einsum("nij,nj->ni", R_L, mu_L) - np.einsum("nij,nj->ni", R_R, mu_R)) @ IBi.T
    w_L = mu_L @ ILi.T - np.einsum("nji,nj->ni", R_L, w_B)
    w_R = mu_R @ IRi.T - np.einsum("nji,nj->ni", R_R, w_B)
    return np.hstack([m[:, 0:3] / p.m_T, w_B, w_L, w_R])


def _diagnostic_arrays(p, R_BI, R_L, R_R, Gamma, r_I, z, m):
    """Energy, pi_z and advected-vector consistency for stacked samples."""
    zm = 0.5 * np.einsum("ni,ni->n", z, m)
    heights = p.m_T * r_I[:, 2]
    heights = heights + p.m_WL * np.einsum("nj,nj->n", R_BI[:, 2, :], R_L @ p.hbar_L)
    heights = heights + p.m_WR * np.einsum("nj,nj->n", R_BI[:, 2, :], R_R @ p.hbar_R)
    E = zm + p.g * heights
    P = np.einsum("nij,nj->ni", R_BI, m[:, 0:3])
    H = np.einsum("nij,nj->ni", R_BI, m[:, 3:6]) + np.cross(r_I, P)
    gamma_err = np.linalg.norm(Gamma - R_BI[:, 2, :], axis=1)
    return E, H[:, 2], gamma_err


class Trajectory:
    """Column-oriented record of a run; ``state(i)`` rebuilds one sample.

    Arrays: ``t (N,)``, ``r_I``, ``r``, ``Gamma`` ``(N, 3)``, ``R_BI``,
    ``R_WLB``, ``R_WRB`` ``(N, 3, 3)``, ``z`` and ``momenta`` ``(N, 12)``,
    ``forces (N, 18)`` in :meth:`ForceInputs.as_vector` order, and the
    diagnostics ``energy``, ``pi_z``, ``gamma_err``.
    """

    def __init__(self, p, t, R_BI, R_WLB, R_WRB, Gamma, x, forces):
        self.params = p
        self.t = np.asarray(t, dtype=float)
        self.R_BI = R_BI
        self.R_WLB = R_WLB
        self.R_WRB = R_WRB
        self.Gamma = Gamma
        self.r_I = x[:, 0:3]
        self.r = x[:, 3:6]
        self.momenta = x[:, 6:18]
        self.z = _velocity_arrays(p, R_WLB, R_WRB, self.momenta)
        self.forces = forces
        self.energy, self.pi_z, self.gamma_err = _diagnostic_arrays(
            p, R_BI, R_WLB, R_WRB, Gamma, self.r_I, self.z, self.momenta
        )
        self.steps = None  # integration steps taken; set by simulate

    def __len__(self):
        return len(self.t)

    def state(self, i):
        shape = ShapeConfig(self.R_WLB[i], self.R_WRB[i])
        pose = ReducedPose(self.r[i], self.Gamma[i], shape)
        return ReducedState(pose, VelocityZ.from_vector(self.z[i]), self.R_BI[i], self.r_I[i], self.t[i])

    def force_inputs(self, i):
        f = self.forces[i]
        return ForceInputs(f[0:3], f[3:6], f[6:9], f[9:12], f[12:15], f[15:18])

    @property
    def final_state(self):
        return self.state(len(self) - 1)

    def spatial_momenta(self):
        """Inertial linear momentum and angular momentum about the origin, ``(N, 3)`` each."""
        P = np.einsum("nij,nj->ni", self.R_BI, self.momenta[:, 0:3])
        H = np.einsum("nij,nj->ni", self.R_BI, self.momenta[:, 3:6]) + np.cross(self.r_I, P)
        return P, H

    @staticmethod
    def _drift(series):
        ref = abs(series[0])
        dev = float(np.max(np.abs(series - series[0])))
        return dev / ref if ref > 0.0 else dev

    def energy_drift_rel(self):
        return self._drift(self.energy)

    def pi_z_drift_rel(self):
        return self._drift(self.pi_z)

    def gamma_norm_err_max(self):
        return float(np.max(np.abs(np.linalg.norm(self.Gamma, axis=1) - 1.0)))

    def gamma_consistency_max(self):
        return float(np.max(self.gamma_err))


def n_steps_for(duration, dt):
    """Number of steps covering ``duration`` (at least one)."""
    return max(1, int(math.ceil(duration / dt - 1e-9)))


def _builtin_damping(provider):
    """``(c_lin, c_rot)`` if the provider can run inside the compiled loop, else None."""
    if provider is None or type(provider) is ZeroForces:
        return 0.0, 0.0
    if type(provider) is LinearDamping:
        return provider.c_lin, provider.c_rot
    return None


def _force_arrays(p, provider, gait, t, z, states):
    n = len(t)
    out = np.zeros((n, 18))
    damping = _builtin_damping(provider)
    if damping is not None:
        c_lin, c_rot = damping
        out[:, 0:3] = -c_lin * z[:, 0:3]
        out[:, 3:12] = -c_rot * z[:, 3:12]
    else:
        for i in range(n):
            out[i] = provider(states(i)).as_vector()
    if gait is not None and gait.active:
        w = 2.0 * np.pi * gait.frequency * t
        out[:, 12:15] += (gait.amplitude * np.sin(w + gait.phase_L))[:, None] * gait.axis_L
        out[:, 15:18] += (gait.amplitude * np.sin(w + gait.phase_R))[:, None] * gait.axis_R
    return out


def _build(p, provider, gait, t, R, G, x):
    traj = Trajectory(p, t, R[:, 0], R[:, 1], R[:, 2], G, x, np.zeros((len(t), 18)))
    traj.forces = _force_arrays(p, provider, gait, traj.t, traj.z, traj.state)
    return traj


def _python_run(p, st0, provider, gait, cfg, n):
    forcing = _Forcing(p, provider, gait)
    stepper = _STEPPERS[cfg.method]
    n_rec = n // cfg.record_every + 1
    ts = np.empty(n_rec)
    Rs = np.empty((n_rec, 3, 3, 3))
    Gs = np.empty((n_rec, 3))
    xs = np.empty((n_rec, 18))
    y = _Flat.from_state(p, st0)

    def record(j):
        ts[j] = y.t
        Rs[j] = (y.R_BI, y.R_L, y.R_R)
        Gs[j] = y.Gamma
        xs[j] = y.x

    record(0)
    j = 1
    for k in range(1, n + 1):
        y = stepper(p, y, cfg.dt, forcing)
        y.t = st0.t + k * cfg.dt
        if not y.finite():
            return ts, Rs, Gs, xs, j, k
        if k % cfg.record_every == 0:
            record(j)
            j += 1
    return ts, Rs, Gs, xs, j, -1


def sample_trajectory(p, st, provider=None, gait=None):
    """One-sample trajectory holding ``st`` (a zero-length run)."""
    y = _Flat.from_state(p, st)
    R = np.stack([y.R_BI, y.R_L, y.R_R])[None]
    traj = _build(p, provider, gait, np.array([st.t]), R, y.Gamma[None], y.x[None])
    traj.steps = 0
    return traj


def simulate(p, st0, provider=None, gait=None, cfg=IntegratorConfig(), duration=1.0, compiled=True):
    """Integrate from ``st0`` for ``duration`` seconds.

    Samples are recorded every ``cfg.record_every`` steps starting at ``st0``.
    The built-in providers run in a compiled loop unless ``compiled=False``;
    any other provider is called from Python at every stage. Raises
    :class:`NonFinite` with the partial trajectory attached as
    ``exc.trajectory`` if the state diverges.
    """
    if not duration > 0.0:
        raise ValueError("duration must be positive")
    n = n_steps_for(duration, cfg.dt)
    damping = _builtin_damping(provider)
    if compiled and damping is not None:
        scal, inv, hbar = _kernels.pack_params(p)
        forc = _kernels.pack_forcing(gait, *damping)
        y = _Flat.from_state(p, st0)
        R0 = np.stack([y.R_BI, y.R_L, y.R_R])
        method = 0 if cfg.method is Method.MK4 else 1
        ts, Rs, Gs, xs, j, bad = _kernels.run(
            scal, inv, hbar, forc, float(st0.t), cfg.dt, R0, y.Gamma.copy(), y.x.copy(), n, cfg.record_every, method
        )
    else:
        ts, Rs, Gs, xs, j, bad = _python_run(p, st0, provider, gait, cfg, n)
    traj = _build(p, provider, gait, ts[:j], Rs[:j], Gs[:j], xs[:j])
    traj.steps = n if bad < 0 else bad
    if bad >= 0:
        exc = NonFinite(f"state became non-finite at step {bad} (t = {st0.t + bad * cfg.dt:.6g} s)", step=bad)
        exc.trajectory = traj
        raise exc
    return traj

"""Forced reduced equations of motion, advection and reconstruction.

The state is advanced in momentum form. With ``(p_lin, pi_B, mu_L, mu_R)``
the blocks of ``M(s) z`` and ``u_W = R_W^T w_B``::

    d p_lin / dt = p_lin x w_B + dl/dr + F_a
    d pi_B  / dt = pi_B x w_B + p_lin x v + dl/dr x r + dl/dGamma x Gamma + T_aB
    d mu_W  / dt = mu_W x w_W + tau_W + T_cW + T_aW
    d Gamma / dt = -w_B x Gamma
    d r     / dt = -w_B x r + v
    d R_WB  / dt = R_WB hat(w_W)
    d R_BI  / dt = R_BI hat(w_B),    d r_I / dt = R_BI v

where ``tau_W = mu_W x u_W - m_W g hbar_W x (R_W^T Gamma)`` is the
left-trivialized shape gradient. Forces are given in the frame of the body
they act on; wing torques act about the hinge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .errors import SingularMass
from .model import (
    InertialParams,
    ReducedPose,
    ShapeConfig,
    VelocityZ,
    _vec3,
    momenta,
)
from .so3 import E_Z, as_rotation, cross, hat


@dataclass(frozen=True, eq=False)
class ReducedState:
    pose: ReducedPose
    z: VelocityZ
    R_BI: np.ndarray
    r_I: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        R = as_rotation(self.R_BI, "R_BI")
        object.__setattr__(self, "R_BI", R)
        object.__setattr__(self, "r_I", _vec3(self.r_I, "r_I"))
        object.__setattr__(self, "t", float(self.t))
        err = np.linalg.norm(self.pose.Gamma - R.T @ E_Z)
        if err > 1e-6:
            raise ValueError(f"Gamma inconsistent with R_BI (|Gamma - R_BI^T e_z| = {err:.3e})")

    @classmethod
    def from_inertial(cls, R_BI, r_I, shape, z, t=0.0):
        """Build a state from the inertial pose, deriving ``r`` and ``Gamma``."""
        R = as_rotation(R_BI, "R_BI")
        r_I = _vec3(r_I, "r_I")
        pose = ReducedPose(R.T @ r_I, R.T @ E_Z, shape)
        return cls(pose, z, R, r_I, t)

    @property
    def shape(self):
        return self.pose.shape


@dataclass(frozen=True, eq=False)
class ForceInputs:
    """Aerodynamic and control loads.

    ``F_a`` and ``T_aB`` are in the body frame; wing torques are in the
    respective wing frames.
    """

    F_a: np.ndarray = field(default_factory=lambda: np.zeros(3))
    T_aB: np.ndarray = field(default_factory=lambda: np.zeros(3))
    T_aL: np.ndarray = field(default_factory=lambda: np.zeros(3))
    T_aR: np.ndarray = field(default_factory=lambda: np.zeros(3))
    T_cL: np.ndarray = field(default_factory=lambda: np.zeros(3))
    T_cR: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("F_a", "T_aB", "T_aL", "T_aR", "T_cL", "T_cR"):
            object.__setattr__(self, name, _vec3(getattr(self, name), name))

    def as_vector(self):
        return np.concatenate([self.F_a, self.T_aB, self.T_aL, self.T_aR, self.T_cL, self.T_cR])

    def generalized(self):
        """Loads per velocity slot: ``(F_a, T_aB, T_aL + T_cL, T_aR + T_cR)`` as 12 numbers."""
        return np.concatenate([self.F_a, self.T_aB, self.T_aL + self.T_cL, self.T_aR + self.T_cR])


class ForceProvider(Protocol):
    def __call__(self, state: ReducedState) -> ForceInputs: ...


class ZeroForces:
    name = "zero"

    def __call__(self, state):
        return ForceInputs()

    def __repr__(self):
        return "ZeroForces()"


class LinearDamping:
    """Viscous drag on every velocity slot."""

    name = "linear_damping"

    def __init__(self, c_lin=0.0, c_rot=0.0):
        if c_lin < 0.0 or c_rot < 0.0:
            raise ValueError("damping coefficients must be non-negative")
        self.c_lin = float(c_lin)
        self.c_rot = float(c_rot)

    def __call__(self, state):
        z = state.z
        return ForceInputs(
            F_a=-self.c_lin * z.v,
            T_aB=-self.c_rot * z.w_B,
            T_aL=-self.c_rot * z.w_L,
            T_aR=-self.c_rot * z.w_R,
        )

    def __repr__(self):
        return f"LinearDamping(c_lin={self.c_lin}, c_rot={self.c_rot})"


def builtin_force_providers():
    return {"zero": ZeroForces, "linear_damping": LinearDamping}


@dataclass(frozen=True, eq=False)
class GaitSpec:
    """Sinusoidal joint torque ``amplitude * sin(2 pi f t + phase) * axis`` per wing."""

    amplitude: float = 0.0
    frequency: float = 1.0
    phase_L: float = 0.0
    phase_R: float = 0.0
    axis_L: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    axis_R: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))

    def __post_init__(self):
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "frequency", float(self.frequency))
        object.__setattr__(self, "phase_L", float(self.phase_L))
        object.__setattr__(self, "phase_R", float(self.phase_R))
        if not self.frequency > 0.0:
            raise ValueError(f"gait frequency must be positive, got {self.frequency}")
        for name in ("axis_L", "axis_R"):
            a = _vec3(getattr(self, name), name)
            if abs(np.linalg.norm(a) - 1.0) > 1e-9:
                raise ValueError(f"{name} must be a unit vector")
            object.__setattr__(self, name, a)

    @property
    def active(self):
        return self.amplitude != 0.0


def gait_torque(g, t):
    """Control torques ``(T_cL, T_cR)`` at time ``t``."""
    w = 2.0 * math.pi * g.frequency * t
    return (
        g.amplitude * math.sin(w + g.phase_L) * g.axis_L,
        g.amplitude * math.sin(w + g.phase_R) * g.axis_R,
    )


def total_forces(provider, gait, state):
    """Provider loads at ``state`` with the gait torques added to the joints."""
    f = provider(state) if provider is not None else ForceInputs()
    if gait is None or not gait.active:
        return f
    TL, TR = gait_torque(gait, state.t)
    return ForceInputs(f.F_a, f.T_aB, f.T_aL, f.T_aR, f.T_cL + TL, f.T_cR + TR)


def gamma_rhs(w_B, Gamma):
    return -cross(w_B, Gamma)


def reconstruction_rhs(R_BI, w_B):
    return R_BI @ hat(w_B)


def _solve_blocks(p, R_L, R_R, m):
    # M = P^T D P with D = diag(m_T, I_B, I_L, I_R) and P unit block-triangular,
    # P z = (v, w_B, R_L^T w_B + w_L, R_R^T w_B + w_R).
    IBi, ILi, IRi = p.inv_inertias
    mu_L = m[6:9]
    mu_R = m[9:12]
    w_B = IBi @ (m[3:6] - R_L @ mu_L - R_R @ mu_R)
    w_L = ILi @ mu_L - R_L.T @ w_B
    w_R = IRi @ mu_R - R_R.T @ w_B
    return m[0:3] / p.m_T, w_B, w_L, w_R


def solve_velocities(p, s, momenta4):
    """Velocities ``z`` with ``M(s) z = momenta4``."""
    m = np.asarray(momenta4, dtype=float).reshape(12)
    v, w_B, w_L, w_R = _solve_blocks(p, s.R_WLB, s.R_WRB, m)
    out = np.concatenate([v, w_B, w_L, w_R])
    if not np.all(np.isfinite(out)):
        raise SingularMass("mass-matrix solve produced non-finite velocities")
    return VelocityZ.from_vector(out)


def _torso_rhs(p, pi_B, w_B, p_lin, v, r, Gamma, cL, cR):
    """Torso momentum rate without external torque; ``c_W`` are rotated COM offsets."""
    mg = p.m_T * p.g
    dl_dr = -mg * Gamma
    dl_dG = -p.g * (p.m_T * r + p.m_WL * cL + p.m_WR * cR)
    return cross(pi_B, w_B) + cross(p_lin, v) + cross(dl_dr, r) + cross(dl_dG, Gamma)


def _rates(p, R_L, R_R, r, Gamma, m, gen):
    """Core right-hand side on raw arrays.

    ``m`` holds the 12 momenta and ``gen`` the 12 generalized loads. Returns
    ``(v, w_B, w_L, w_R, m_dot, r_dot, Gamma_dot)``.
    """
    v, w_B, w_L, w_R = _solve_blocks(p, R_L, R_R, m)
    p_lin = m[0:3]
    mu_L = m[6:9]
    mu_R = m[9:12]
    cL = R_L @ p.hbar_L
    cR = R_R @ p.hbar_R
    m_dot = np.empty(12)
    m_dot[0:3] = cross(p_lin, w_B) - (p.m_T * p.g) * Gamma + gen[0:3]
    m_dot[3:6] = _torso_rhs(p, m[3:6], w_B, p_lin, v, r, Gamma, cL, cR) + gen[3:6]
    GL = R_L.T @ Gamma
    GR = R_R.T @ Gamma
    m_dot[6:9] = (
        cross(mu_L, w_L + R_L.T @ w_B) - (p.m_WL * p.g) * cross(p.hbar_L, GL) + gen[6:9]
    )
    m_dot[9:12] = (
        cross(mu_R, w_R + R_R.T @ w_B) - (p.m_WR * p.g) * cross(p.hbar_R, GR) + gen[9:12]
    )
    r_dot = cross(r, w_B) + v
    Gamma_dot = cross(Gamma, w_B)
    return v, w_B, w_L, w_R, m_dot, r_dot, Gamma_dot


@dataclass(frozen=True, eq=False)
class StateDerivative:
    r_I: np.ndarray
    R_BI: np.ndarray
    Gamma: np.ndarray
    r: np.ndarray
    R_WLB: np.ndarray
    R_WRB: np.ndarray
    momenta: np.ndarray
    z: np.ndarray
    w_B: np.ndarray
    w_L: np.ndarray
    w_R: np.ndarray


def _mass_rate_times_z(p, s, z):
    """``dM/dt @ z`` along the shape flow ``R_W' = R_W hat(w_W)``."""
    out = np.zeros(12)
    for R, I, w, sl in ((s.R_WLB, p.I_WL, z.w_L, slice(6, 9)), (s.R_WRB, p.I_WR, z.w_R, slice(9, 12))):
        u = R.T @ z.w_B
        mu = I @ (u + w)
        out[3:6] += R @ (cross(w, mu) - I @ cross(w, u))
        out[sl] = -I @ cross(w, u)
    return out


def reduced_rhs(p: InertialParams, st: ReducedState, f: ForceInputs | None = None) -> StateDerivative:
    """Time derivative of every component of ``st`` under loads ``f``."""
    f = ForceInputs() if f is None else f
    s = st.shape
    m = np.concatenate(momenta(p, s, st.z))
    v, w_B, w_L, w_R, m_dot, r_dot, G_dot = _rates(
        p, s.R_WLB, s.R_WRB, st.pose.r, st.pose.Gamma, m, f.generalized()
    )
    z_dot = solve_velocities(p, s, m_dot - _mass_rate_times_z(p, s, st.z)).as_vector()
    return StateDerivative(
        r_I=st.R_BI @ v,
        R_BI=reconstruction_rhs(st.R_BI, w_B),
        Gamma=G_dot,
        r=r_dot,
        R_WLB=s.R_WLB @ hat(w_L),
        R_WRB=s.R_WRB @ hat(w_R),
        momenta=m_dot,
        z=z_dot,
        w_B=w_B,
        w_L=w_L,
        w_R=w_R,
    )


__all__ = [
    "ReducedState",
    "ForceInputs",
    "ForceProvider",
    "ZeroForces",
    "LinearDamping",
    "GaitSpec",
    "StateDerivative",
    "builtin_force_providers",
    "gait_torque",
    "total_forces",
    "gamma_rhs",
    "reconstruction_rhs",
    "solve_velocities",
    "reduced_rhs",
]

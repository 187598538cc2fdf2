"""Physical parameters, mass matrix and reduced Lagrangian of the two-wing vehicle.

Conventions
-----------
* The body (torso) frame sits at the torso centre of mass, which is also the
  hinge of both wings. Wing frames share that origin.
* ``z = (v, w_B, w_L, w_R)``: translational velocity of the torso expressed in
  the body frame, torso angular velocity (body frame), and each wing's angular
  velocity *relative to the torso*, expressed in its own wing frame.
* ``Gamma`` is the inertial "up" direction seen from the body frame. Gravity
  pulls along ``-Gamma``; heights grow along ``+Gamma``.

The kinetic energy is the quadratic form ``0.5 * z @ M @ z``::

    M = [[m_T I,  0,                         0,        0       ],
         [0,      I_B + sum R_W I_W R_W^T,   R_L I_L,  R_R I_R ],
         [0,      (R_L I_L)^T,               I_L,      0       ],
         [0,      (R_R I_R)^T,               0,        I_R     ]]

and the Lagrangian is ``l = T - V``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidRotation
from .so3 import as_rotation, exp_so3


class Wing(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"


def _vec3(x, name):
    a = np.array(x, dtype=float).reshape(-1)
    if a.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got {a.size}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    return a


def _inertia(x, name):
    a = np.array(x, dtype=float)
    if a.shape == (3,):
        a = np.diag(a)
    if a.shape != (3, 3) or not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be a finite 3x3 matrix or 3 principal moments")
    if np.max(np.abs(a - a.T)) > 1e-12:
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(a)[0] <= 0.0:
        raise ValueError(f"{name} must be positive definite")
    return a


@dataclass(frozen=True, eq=False)
class InertialParams:
    """Masses (kg), inertias about the hinge (kg m^2), wing COM offsets (m), gravity."""

    m_B: float
    m_WL: float
    m_WR: float
    I_B: np.ndarray
    I_WL: np.ndarray
    I_WR: np.ndarray
    hbar_L: np.ndarray = field(default_factory=lambda: np.zeros(3))
    hbar_R: np.ndarray = field(default_factory=lambda: np.zeros(3))
    g: float = 9.81
    rho: float = 1000.0

    def __post_init__(self):
        for name in ("m_B", "m_WL", "m_WR"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value <= 0.0:
                raise ValueError(f"{name} must be a positive mass, got {value}")
            object.__setattr__(self, name, value)
        for name in ("I_B", "I_WL", "I_WR"):
            object.__setattr__(self, name, _inertia(getattr(self, name), name))
        for name in ("hbar_L", "hbar_R"):
            object.__setattr__(self, name, _vec3(getattr(self, name), name))
        g = float(self.g)
        if not np.isfinite(g) or g < 0.0:
            raise ValueError(f"g must be non-negative, got {g}")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def m_T(self):
        return self.m_B + self.m_WL + self.m_WR

    @cached_property
    def inv_inertias(self):
        """``(I_B^-1, I_WL^-1, I_WR^-1)`` computed from Cholesky factors."""
        out = []
        for I in (self.I_B, self.I_WL, self.I_WR):
            C = np.linalg.cholesky(I)
            Ci = np.linalg.inv(C)
            out.append(Ci.T @ Ci)
        return tuple(out)

    def wing(self, wing):
        """``(mass, inertia, hbar)`` of one wing."""
        if Wing(wing) is Wing.LEFT:
            return self.m_WL, self.I_WL, self.hbar_L
        return self.m_WR, self.I_WR, self.hbar_R

    def replace(self, **changes):
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(changes)
        return InertialParams(**data)


@dataclass(frozen=True, eq=False)
class ShapeConfig:
    """Wing attitudes relative to the torso."""

    R_WLB: np.ndarray
    R_WRB: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "R_WLB", as_rotation(self.R_WLB, "R_WLB"))
        object.__setattr__(self, "R_WRB", as_rotation(self.R_WRB, "R_WRB"))

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.eye(3))

    @classmethod
    def from_axis_angle(cls, left, right):
        return cls(exp_so3(left), exp_so3(right))

    def rotation(self, wing):
        return self.R_WLB if Wing(wing) is Wing.LEFT else self.R_WRB


@dataclass(frozen=True, eq=False)
class VelocityZ:
    v: np.ndarray
    w_B: np.ndarray
    w_L: np.ndarray
    w_R: np.ndarray

    def __post_init__(self):
        for name in ("v", "w_B", "w_L", "w_R"):
            object.__setattr__(self, name, _vec3(getattr(self, name), name))

    @classmethod
    def zero(cls):
        return cls(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))

    @classmethod
    def from_vector(cls, z):
        z = np.asarray(z, dtype=float)
        return cls(z[0:3], z[3:6], z[6:9], z[9:12])

    def as_vector(self):
        return np.concatenate([self.v, self.w_B, self.w_L, self.w_R])


@dataclass(frozen=True, eq=False)
class ReducedPose:
    """Body-frame position ``r``, advected up-direction ``Gamma`` and wing shape."""

    r: np.ndarray
    Gamma: np.ndarray
    shape: ShapeConfig

    def __post_init__(self):
        object.__setattr__(self, "r", _vec3(self.r, "r"))
        G = _vec3(self.Gamma, "Gamma")
        if abs(np.linalg.norm(G) - 1.0) > 1e-9:
            raise ValueError(f"Gamma must be a unit vector, |Gamma| = {np.linalg.norm(G)!r}")
        object.__setattr__(self, "Gamma", G)
        if not isinstance(self.shape, ShapeConfig):
            raise InvalidRotation("shape must be a ShapeConfig")


def assemble_mass_matrix(p, s):
    """12x12 block mass matrix for block order ``(v, w_B, w_L, w_R)``."""
    RL, RR = s.R_WLB, s.R_WRB
    RIL = RL @ p.I_WL
    RIR = RR @ p.I_WR
    M = np.zeros((12, 12))
    M[0:3, 0:3] = p.m_T * np.eye(3)
    M[3:6, 3:6] = p.I_B + RIL @ RL.T + RIR @ RR.T
    M[3:6, 6:9] = RIL
    M[6:9, 3:6] = RIL.T
    M[3:6, 9:12] = RIR
    M[9:12, 3:6] = RIR.T
    M[6:9, 6:9] = p.I_WL
    M[9:12, 9:12] = p.I_WR
    return M


def kinetic_energy(p, s, z):
    zv = z.as_vector()
    return 0.5 * float(zv @ assemble_mass_matrix(p, s) @ zv)


def potential_energy(p, pose):
    G = pose.Gamma
    s = pose.shape
    return p.g * (
        p.m_T * float(pose.r @ G)
        + p.m_WL * float((s.R_WLB @ p.hbar_L) @ G)
        + p.m_WR * float((s.R_WRB @ p.hbar_R) @ G)
    )


def reduced_lagrangian(p, pose, z):
    return kinetic_energy(p, pose.shape, z) - potential_energy(p, pose)


def momenta(p, s, z):
    """``(p_lin, pi_B, mu_L, mu_R)``: the four 3-blocks of ``M(s) @ z``."""
    mz = assemble_mass_matrix(p, s) @ z.as_vector()
    return mz[0:3], mz[3:6], mz[6:9], mz[9:12]


def dl_dr(p, pose):
    return -p.m_T * p.g * pose.Gamma


def dl_dGamma(p, pose):
    s = pose.shape
    return -p.g * (p.m_T * pose.r + p.m_WL * (s.R_WLB @ p.hbar_L) + p.m_WR * (s.R_WRB @ p.hbar_R))


def shape_gradient(p, pose, z, wing):
    """Left-trivialized gradient of ``l`` with respect to one wing rotation.

    With ``u = R_W^T w_B`` the torso rate seen in the wing frame and
    ``mu = I_W (u + w_W)`` the wing momentum, the kinetic part is ``mu x u``
    and gravity contributes ``-m_W g hbar x (R_W^T Gamma)``.
    """
    wing = Wing(wing)
    m_W, I_W, hbar = p.wing(wing)
    R = pose.shape.rotation(wing)
    w_W = z.w_L if wing is Wing.LEFT else z.w_R
    u = R.T @ z.w_B
    mu = I_W @ (u + w_W)
    return np.cross(mu, u) - m_W * p.g * np.cross(hbar, R.T @ pose.Gamma)


def perturb_wing(pose, wing, eta):
    """Pose with one wing rotated by ``R_W @ exp(hat(eta))``."""
    s = pose.shape
    if Wing(wing) is Wing.LEFT:
        shape = ShapeConfig(s.R_WLB @ exp_so3(eta), s.R_WRB)
    else:
        shape = ShapeConfig(s.R_WLB, s.R_WRB @ exp_so3(eta))
    return ReducedPose(pose.r, pose.Gamma, shape)


__all__ = [
    "InertialParams",
    "ShapeConfig",
    "VelocityZ",
    "ReducedPose",
    "Wing",
    "assemble_mass_matrix",
    "kinetic_energy",
    "potential_energy",
    "reduced_lagrangian",
    "momenta",
    "dl_dr",
    "dl_dGamma",
    "shape_gradient",
    "perturb_wing",
]

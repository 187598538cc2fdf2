"""Random parameters and states for property checks."""

from __future__ import annotations

import numpy as np

from .dynamics import ReducedState
from .model import InertialParams, ShapeConfig, VelocityZ
from .so3 import exp_so3


def random_rotation(rng, max_angle=np.pi):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return exp_so3(rng.uniform(0.0, max_angle) * axis)


def random_inertia(rng, scale=1.0):
    """SPD matrix satisfying the triangle inequality of principal moments."""
    a, b = rng.uniform(0.5, 1.5, size=2)
    c = rng.uniform(abs(a - b) + 0.1, a + b)
    Q = random_rotation(rng)
    return scale * (Q @ np.diag([a, b, c]) @ Q.T)


def random_params(rng, g=9.81):
    I = [random_inertia(rng, s) for s in (1.0, 0.3, 0.3)]
    return InertialParams(
        m_B=rng.uniform(0.5, 2.0),
        m_WL=rng.uniform(0.1, 0.5),
        m_WR=rng.uniform(0.1, 0.5),
        I_B=0.5 * (I[0] + I[0].T),
        I_WL=0.5 * (I[1] + I[1].T),
        I_WR=0.5 * (I[2] + I[2].T),
        hbar_L=rng.uniform(-0.5, 0.5, size=3),
        hbar_R=rng.uniform(-0.5, 0.5, size=3),
        g=g,
    )


def random_velocity(rng, scale=1.0):
    return VelocityZ.from_vector(scale * rng.normal(size=12))


def random_state(rng, max_angle=np.pi, vel_scale=1.0, pos_scale=1.0, t=0.0):
    shape = ShapeConfig(random_rotation(rng, max_angle), random_rotation(rng, max_angle))
    return ReducedState.from_inertial(
        random_rotation(rng, max_angle),
        pos_scale * rng.normal(size=3),
        shape,
        random_velocity(rng, vel_scale),
        t,
    )

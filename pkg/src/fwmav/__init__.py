"""Reduced geometric dynamics of a two-winged flapping vehicle.

The torso pose is reduced away by symmetry: the equations are integrated in
body coordinates together with the advected up-direction ``Gamma`` and the
wing shape, and the inertial attitude is reconstructed alongside.
"""

from .dynamics import (
    ForceInputs,
    ForceProvider,
    GaitSpec,
    LinearDamping,
    ReducedState,
    ZeroForces,
    builtin_force_providers,
    gait_torque,
    gamma_rhs,
    reconstruction_rhs,
    reduced_rhs,
    solve_velocities,
)
from .errors import (
    ChartOverflow,
    ConfigError,
    Degenerate,
    FwmavError,
    InvalidRotation,
    NonFinite,
    NonSkew,
    SingularMass,
)
from .integrator import IntegratorConfig, Method, Trajectory, diagnostics, simulate, step
from .model import (
    InertialParams,
    ReducedPose,
    ShapeConfig,
    VelocityZ,
    Wing,
    assemble_mass_matrix,
    dl_dGamma,
    dl_dr,
    kinetic_energy,
    momenta,
    potential_energy,
    reduced_lagrangian,
    shape_gradient,
)
from .so3 import exp_so3, hat, log_so3, project_so3, vee

__version__ = "0.1.0"

"""Trajectory CSV and run summary files.

The trajectory CSV has one header row and one row per recorded sample, with
columns in this fixed order:

====================  ==  ==============================================
``t``                  1  time (s)
``r_I_x..z``           3  torso position, inertial frame (m)
``R_BI_00..22``        9  torso attitude, row-major
``Gamma_x..z``         3  up-direction in the body frame
``v_x..z``             3  translational velocity, body frame (m/s)
``w_B_x..z``           3  torso angular velocity, body frame (rad/s)
``aa_L_x..z``          3  axis-angle of the left wing relative to the torso
``w_L_x..z``           3  left wing relative angular velocity, wing frame
``aa_R_x..z``          3  axis-angle of the right wing
``w_R_x..z``           3  right wing relative angular velocity
``E``                  1  total energy (J)
``pi_z``               1  vertical spatial angular momentum (kg m^2/s)
====================  ==  ==============================================

36 columns in all. Numbers are written with ``%.17g`` so files round-trip
exactly and identical runs give identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .oracle import STATE_COMPONENTS
from .so3 import log_so3

_XYZ = ("x", "y", "z")


def _vec(name):
    return [f"{name}_{c}" for c in _XYZ]


CSV_COLUMNS = (
    ["t"]
    + _vec("r_I")
    + [f"R_BI_{i}{j}" for i in range(3) for j in range(3)]
    + _vec("Gamma")
    + _vec("v")
    + _vec("w_B")
    + _vec("aa_L")
    + _vec("w_L")
    + _vec("aa_R")
    + _vec("w_R")
    + ["E", "pi_z"]
)

FLOAT_FMT = "%.17g"


def trajectory_table(traj):
    """``(samples, 36)`` array in :data:`CSV_COLUMNS` order."""
    n = len(traj.t)
    aa_L = np.array([log_so3(R) for R in traj.R_WLB])
    aa_R = np.array([log_so3(R) for R in traj.R_WRB])
    z = traj.z
    return np.column_stack(
        [
            traj.t,
            traj.r_I,
            traj.R_BI.reshape(n, 9),
            traj.Gamma,
            z[:, 0:3],
            z[:, 3:6],
            aa_L,
            z[:, 6:9],
            aa_R,
            z[:, 9:12],
            traj.energy,
            traj.pi_z,
        ]
    )


def _write_table(path, columns, table):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        np.savetxt(fh, table, fmt=FLOAT_FMT, delimiter=",")
    return path


def write_trajectory_csv(path, traj):
    return _write_table(path, CSV_COLUMNS, trajectory_table(traj))


def read_csv(path):
    """``(columns, data)`` of a CSV written by this module."""
    with open(path) as fh:
        columns = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return columns, data


def summary(traj, wall_time_s):
    return {
        "energy_drift_rel": traj.energy_drift_rel(),
        "pi_z_drift_rel": traj.pi_z_drift_rel(),
        "gamma_norm_err_max": traj.gamma_norm_err_max(),
        "gamma_consistency_max": traj.gamma_consistency_max(),
        "steps": int(traj.steps),
        "wall_time_s": float(wall_time_s),
    }


def write_json(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2) + "\n")
    return path


def write_error_csv(path, comparison):
    """Per-component relative error series of a reduced/oracle comparison."""
    table = np.column_stack([comparison.t, comparison.rel_series])
    return _write_table(path, ["t"] + list(STATE_COMPONENTS), table)

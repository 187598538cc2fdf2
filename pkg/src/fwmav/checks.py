"""Property suites run by ``fwmav check``.

Each suite returns one or more :class:`Measurement` rows. Suites that
certify the equations themselves (``lagrangian``, ``gradcheck``, ``oracle``)
draw random parameters and states from the seed; the conservation suites
start from the configured vehicle and initial state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import oracle
from .dynamics import GaitSpec, ReducedState
from .integrator import IntegratorConfig, Method, simulate
from .model import ShapeConfig, VelocityZ, reduced_lagrangian
from .sampling import random_params, random_state

# default tolerances; keys are the measurement names
TOLERANCES = {
    "lagrangian": 1e-10,
    "gradcheck": 1e-6,
    "oracle": 1e-4,
    "energy": 1e-6,
    "pi_z": 1e-6,
    "momentum_linear": 1e-6,
    "momentum_angular": 1e-6,
    "gamma_norm": 1e-9,
    "gamma_consistency": 1e-6,
    "order": 4.0,  # allowed |ratio - 16|
    "freefall": 1e-10,
}

DEFAULT_GAIT = GaitSpec(amplitude=0.5, frequency=10.0, phase_R=0.7, axis_R=[0.0, 0.6, 0.8])


@dataclass(frozen=True)
class Measurement:
    name: str
    value: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self):
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)


def _rel_drift(series):
    ref = float(np.max(np.abs(series[0])))
    dev = float(np.max(np.abs(series - series[0])))
    return dev / ref if ref > 0.0 else dev


def lagrangian_equality(rng, n=1000):
    """Max ``|l_reduced - L_full| / max(1, |L|)`` over matched random states."""
    worst = 0.0
    for _ in range(n):
        p = random_params(rng)
        st = random_state(rng, vel_scale=2.0)
        chart, q, qd = oracle.chart_from_state(st)
        L = oracle.full_lagrangian(p, chart, q, qd)
        worst = max(worst, abs(reduced_lagrangian(p, st.pose, st.z) - L) / max(1.0, abs(L)))
    return worst


def gradient_certification(rng, n=100):
    worst = {}
    for _ in range(n):
        p = random_params(rng)
        st = random_state(rng, vel_scale=2.0)
        for k, v in oracle.gradient_errors(p, st.pose, st.z).items():
            worst[k] = max(worst.get(k, 0.0), v)
    return worst


def oracle_equivalence(rng, n=20, duration=0.5, dt=1e-4, gait=DEFAULT_GAIT, record_every=50):
    """Worst relative state error between reduced and oracle runs; half of them gait-driven."""
    p = random_params(rng)
    states = [random_state(rng, vel_scale=2.0) for _ in range(n)]
    gaits = [None if i < n // 2 else gait for i in range(n)]
    orc = oracle.oracle_simulate_many(p, states, gaits, dt=dt, duration=duration, record_every=record_every)
    cfg = IntegratorConfig(dt=dt, record_every=record_every)
    worst, where = 0.0, None
    for st, g, o in zip(states, gaits, orc):
        cmp = oracle.compare(simulate(p, st, gait=g, cfg=cfg, duration=duration), o)
        if cmp.max_rel >= worst:
            worst, where = cmp.max_rel, cmp.worst()
    return worst, where


def _unforced(cfg):
    return cfg.inertial_params(), cfg.initial_state()


def energy_drift(cfg, duration=10.0, dt=1e-4):
    p, st = _unforced(cfg)
    traj = simulate(p, st, cfg=IntegratorConfig(dt=dt, record_every=10), duration=duration)
    return traj.energy_drift_rel()


def pi_z_drift(cfg, duration=5.0, dt=1e-4):
    p, st = _unforced(cfg)
    gait = cfg.gait_spec()
    gait = gait if gait.active else DEFAULT_GAIT
    traj = simulate(p, st, gait=gait, cfg=IntegratorConfig(dt=dt, record_every=10), duration=duration)
    return traj.pi_z_drift_rel()


def momentum_drift(cfg, duration=5.0, dt=1e-4):
    """Relative drift of the spatial linear and angular momentum vectors at ``g = 0``."""
    p, st = _unforced(cfg)
    p = p.replace(g=0.0)
    gait = cfg.gait_spec()
    gait = gait if gait.active else DEFAULT_GAIT
    traj = simulate(p, st, gait=gait, cfg=IntegratorConfig(dt=dt, record_every=10), duration=duration)
    P, H = traj.spatial_momenta()
    return _rel_drift(P), _rel_drift(H)


def gamma_fidelity(cfg, steps=100_000, dt=1e-4):
    p, st = _unforced(cfg)
    traj = simulate(p, st, cfg=IntegratorConfig(dt=dt, record_every=100), duration=steps * dt)
    return traj.gamma_norm_err_max(), traj.gamma_consistency_max()


def _endpoint(p, st, dt, duration, method):
    s = simulate(p, st, cfg=IntegratorConfig(dt=dt, method=method), duration=duration).final_state
    return np.concatenate([s.r_I, s.R_BI.ravel(), s.shape.R_WLB.ravel(), s.shape.R_WRB.ravel(), s.z.as_vector()])


def order_ratio(cfg, dt=0.01, duration=0.1, method=Method.MK4):
    """``err(dt) / err(dt/2)`` at the end of an unforced run, errors against a dt/100 reference."""
    p, st = _unforced(cfg)
    ref = _endpoint(p, st, dt / 100, duration, method)
    e1 = np.max(np.abs(_endpoint(p, st, dt, duration, method) - ref))
    e2 = np.max(np.abs(_endpoint(p, st, dt / 2, duration, method) - ref))
    return float(e1 / e2)


def freefall_error(cfg, duration=1.0, dt=1e-4):
    """Max relative deviation of ``z(t)`` from ``z0 - g t^2 / 2`` for a drop from rest."""
    p = cfg.inertial_params().replace(hbar_L=np.zeros(3), hbar_R=np.zeros(3))
    st0 = cfg.initial_state()
    st = ReducedState.from_inertial(st0.R_BI, st0.r_I, ShapeConfig(st0.shape.R_WLB, st0.shape.R_WRB), VelocityZ.zero(), 0.0)
    traj = simulate(p, st, cfg=IntegratorConfig(dt=dt, record_every=100), duration=duration)
    exact = st.r_I[2] - 0.5 * p.g * traj.t**2
    scale = max(1.0, float(np.max(np.abs(exact))))
    return float(np.max(np.abs(traj.r_I[:, 2] - exact)) / scale)


def _suite_lagrangian(cfg, rng):
    return [Measurement("lagrangian", lagrangian_equality(rng), TOLERANCES["lagrangian"], "1000 matched states")]


def _suite_gradcheck(cfg, rng):
    worst = gradient_certification(rng)
    name = max(worst, key=worst.get)
    return [Measurement("gradcheck", worst[name], TOLERANCES["gradcheck"], f"worst partial: {name}")]


def _suite_oracle(cfg, rng):
    worst, (comp, t) = oracle_equivalence(rng)
    return [Measurement("oracle", worst, TOLERANCES["oracle"], f"worst: {comp} at t={t:.4g} s")]


def _suite_energy(cfg, rng):
    return [Measurement("energy", energy_drift(cfg), TOLERANCES["energy"], "unforced, 10 s")]


def _suite_pi_z(cfg, rng):
    return [Measurement("pi_z", pi_z_drift(cfg), TOLERANCES["pi_z"], "gait on, 5 s")]


def _suite_momentum(cfg, rng):
    lin, ang = momentum_drift(cfg)
    return [
        Measurement("momentum_linear", lin, TOLERANCES["momentum_linear"], "g = 0, 5 s"),
        Measurement("momentum_angular", ang, TOLERANCES["momentum_angular"], "g = 0, 5 s"),
    ]


def _suite_gamma(cfg, rng):
    norm, cons = gamma_fidelity(cfg)
    return [
        Measurement("gamma_norm", norm, TOLERANCES["gamma_norm"], "1e5 steps"),
        Measurement("gamma_consistency", cons, TOLERANCES["gamma_consistency"], "1e5 steps"),
    ]


def _suite_order(cfg, rng):
    ratio = order_ratio(cfg)
    return [Measurement("order", abs(ratio - 16.0), TOLERANCES["order"], f"error ratio {ratio:.3f} (nominal 16)")]


def _suite_freefall(cfg, rng):
    return [Measurement("freefall", freefall_error(cfg), TOLERANCES["freefall"], "1 s from rest")]


SUITES = {
    "lagrangian": _suite_lagrangian,
    "gradcheck": _suite_gradcheck,
    "oracle": _suite_oracle,
    "energy": _suite_energy,
    "pi_z": _suite_pi_z,
    "momentum": _suite_momentum,
    "gamma": _suite_gamma,
    "order": _suite_order,
    "freefall": _suite_freefall,
}


def run_suites(cfg, names=None, seed=0, tolerances=None):
    """Run the named suites (all by default) and return their measurements."""
    names = list(SUITES) if not names else names
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s) {unknown}; choose from {list(SUITES)}")
    tol = dict(TOLERANCES, **(tolerances or {}))
    out = []
    for name in names:
        rng = np.random.default_rng([seed, list(SUITES).index(name)])
        for m in SUITES[name](cfg, rng):
            out.append(Measurement(m.name, m.value, tol[m.name], m.detail))
    return out


def format_table(rows):
    head = f"{'property':<20}{'measured':>14}{'tolerance':>12}  result  detail"
    lines = [head, "-" * len(head)]
    for m in rows:
        value = f"{m.value:.3e}" if math.isfinite(m.value) else str(m.value)
        lines.append(
            f"{m.name:<20}{value:>14}{m.tolerance:>12.1e}  {'PASS' if m.passed else 'FAIL':<6}  {m.detail}"
        )
    return "\n".join(lines)

import numpy as np
import pytest

from fwmav.dynamics import ForceInputs, GaitSpec, LinearDamping, ReducedState
from fwmav.errors import NonFinite
from fwmav.integrator import IntegratorConfig, Method, diagnostics, sample_trajectory, simulate, step
from fwmav.model import InertialParams, ShapeConfig, VelocityZ
from fwmav.sampling import random_params, random_rotation, random_state
from fwmav.so3 import exp_so3, is_rotation

GAIT = GaitSpec(amplitude=0.5, frequency=10.0, phase_R=0.7, axis_R=[0.0, 0.6, 0.8])


def flat(st):
    return np.concatenate([st.r_I, st.R_BI.ravel(), st.shape.R_WLB.ravel(), st.shape.R_WRB.ravel(), st.z.as_vector()])


def spinner(w):
    """Diagonal inertias, wings locked at identity: a free rigid body."""
    p = InertialParams(1.0, 0.1, 0.1, [1.0, 2.0, 3.0], [0.1, 0.2, 0.3], [0.2, 0.1, 0.3], g=0.0)
    z = VelocityZ(np.zeros(3), w, np.zeros(3), np.zeros(3))
    return p, ReducedState.from_inertial(np.eye(3), np.zeros(3), ShapeConfig.identity(), z)


def test_config_validation():
    for kw in (dict(dt=0.0), dict(dt=0.2), dict(record_every=0), dict(method="Euler")):
        with pytest.raises(ValueError):
            IntegratorConfig(**kw)
    assert IntegratorConfig(method="RK4Project").method is Method.RK4_PROJECT


@pytest.mark.parametrize("method", list(Method))
def test_fixed_point(rng, method):
    p = random_params(rng, g=0.0)
    st = ReducedState.from_inertial(
        random_rotation(rng), rng.normal(size=3), ShapeConfig(random_rotation(rng), random_rotation(rng)), VelocityZ.zero()
    )
    out = step(p, st, cfg=IntegratorConfig(dt=1e-3, method=method))
    assert np.max(np.abs(flat(out) - flat(st))) <= 1e-15
    assert out.t == pytest.approx(1e-3)


@pytest.mark.parametrize("method", list(Method))
def test_constant_spin_about_principal_axis(method):
    w = np.array([0.0, 0.0, 2.0])
    p, st = spinner(w)
    dt = 1e-2
    traj = simulate(p, st, cfg=IntegratorConfig(dt=dt, method=method), duration=1.0, compiled=False)
    # MK4 reproduces the exponential exactly; RK4 on matrix entries carries the
    # truncated Taylor series, (|w| dt)^5 / 120 per step
    per_step = 1e-14 if method is Method.MK4 else (np.linalg.norm(w) * dt) ** 5 / 60
    for k in range(len(traj)):
        R_exact = exp_so3(traj.t[k] * w)
        assert np.max(np.abs(traj.R_BI[k] - R_exact)) <= max(1e-13, k * per_step)
        assert np.allclose(traj.z[k, 3:6], w, atol=1e-12)


def test_spin_about_unstable_axis_single_step_error():
    # off-axis spin: one step against a much finer integration shrinks like dt^5
    p, st = spinner(np.array([0.3, 1.5, 0.2]))
    p = p.replace(g=0.0)

    def err(dt):
        a = step(p, st, cfg=IntegratorConfig(dt=dt))
        b = simulate(p, st, cfg=IntegratorConfig(dt=dt / 64), duration=dt, compiled=False).final_state
        return np.max(np.abs(flat(a) - flat(b)))

    ratio = err(0.02) / err(0.01)
    assert 20.0 < ratio < 45.0  # nominal 32


def test_methods_agree(rng):
    dt = 1e-3
    for _ in range(10):
        p = random_params(rng)
        st = random_state(rng)
        a = step(p, st, cfg=IntegratorConfig(dt=dt, method=Method.MK4))
        b = step(p, st, cfg=IntegratorConfig(dt=dt, method=Method.RK4_PROJECT))
        assert np.max(np.abs(flat(a) - flat(b))) <= 10 * dt**4


@pytest.mark.parametrize("method", list(Method))
def test_compiled_matches_python(rng, method):
    p = random_params(rng)
    st = random_state(rng)
    cfg = IntegratorConfig(dt=1e-3, method=method, record_every=7)
    prov = LinearDamping(0.3, 0.1)
    a = simulate(p, st, prov, GAIT, cfg, duration=0.2)
    b = simulate(p, st, prov, GAIT, cfg, duration=0.2, compiled=False)
    assert np.array_equal(a.t, b.t)
    for name in ("r_I", "R_BI", "R_WLB", "R_WRB", "Gamma", "z", "forces"):
        assert np.allclose(getattr(a, name), getattr(b, name), rtol=0, atol=1e-11), name


def test_one_step_gives_two_samples(rng):
    p = random_params(rng)
    traj = simulate(p, random_state(rng), cfg=IntegratorConfig(dt=1e-3), duration=1e-9)
    assert len(traj) == 2 and traj.steps == 1
    assert sample_trajectory(p, random_state(rng)).steps == 0


def test_duration_must_be_positive(rng):
    with pytest.raises(ValueError):
        simulate(random_params(rng), random_state(rng), duration=0.0)


def test_recording_and_rotation_invariants(rng):
    p = random_params(rng)
    traj = simulate(p, random_state(rng), LinearDamping(0.1, 0.1), GAIT, IntegratorConfig(dt=1e-3, record_every=5), 0.5)
    assert len(traj) == 101
    assert np.allclose(np.diff(traj.t), 5e-3, rtol=0, atol=1e-12)
    for k in range(len(traj)):
        for R in (traj.R_BI[k], traj.R_WLB[k], traj.R_WRB[k]):
            assert is_rotation(R, 1e-9)
    assert traj.gamma_norm_err_max() <= 1e-12


def test_forces_are_recorded(rng):
    p = random_params(rng)
    st = random_state(rng)
    traj = simulate(p, st, LinearDamping(2.0, 0.0), None, IntegratorConfig(dt=1e-3), 0.01)
    assert np.array_equal(traj.force_inputs(0).F_a, -2.0 * st.z.v)


def test_determinism(rng):
    p = random_params(rng)
    st = random_state(rng)
    cfg = IntegratorConfig(dt=1e-3, record_every=3)
    a = simulate(p, st, LinearDamping(0.1, 0.1), GAIT, cfg, 0.3)
    b = simulate(p, st, LinearDamping(0.1, 0.1), GAIT, cfg, 0.3)
    for name in ("t", "r_I", "R_BI", "z", "energy"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_reports_step(rng):
    class Blowup:
        def __call__(self, state):
            return ForceInputs(F_a=[1e308 if state.t > 0.0045 else 0.0, 0.0, 0.0])

    p = random_params(rng)
    with pytest.raises(NonFinite) as info:
        simulate(p, random_state(rng), Blowup(), cfg=IntegratorConfig(dt=1e-3), duration=1.0)
    assert info.value.step == 5
    assert len(info.value.trajectory) == 5


def test_diagnostics_examples():
    p = InertialParams(1.0, 0.1, 0.1, [1, 1, 1], [0.1, 0.1, 0.1], [0.1, 0.1, 0.1])
    rest = ReducedState.from_inertial(np.eye(3), np.zeros(3), ShapeConfig.identity(), VelocityZ.zero())
    assert diagnostics(p, rest) == (0.0, 0.0, 0.0)
    w = 1.3
    heave = ReducedState.from_inertial(
        np.eye(3), [0.0, 0.0, 2.0], ShapeConfig.identity(), VelocityZ([0.0, 0.0, w], np.zeros(3), np.zeros(3), np.zeros(3))
    )
    traj = simulate(p, heave, cfg=IntegratorConfig(dt=1e-3, record_every=10), duration=0.5)
    z_t = 2.0 + w * traj.t - 0.5 * p.g * traj.t**2
    v_t = w - p.g * traj.t
    assert np.allclose(traj.r_I[:, 2], z_t, atol=1e-12)
    assert np.allclose(traj.energy, 0.5 * p.m_T * v_t**2 + p.m_T * p.g * z_t, atol=1e-12)


def test_pi_z_conserved_with_gait(rng):
    p = random_params(rng)
    traj = simulate(p, random_state(rng), None, GAIT, IntegratorConfig(dt=1e-4, record_every=50), 0.5)
    assert traj.pi_z_drift_rel() <= 1e-9


def test_energy_conserved_unforced(rng):
    p = random_params(rng)
    traj = simulate(p, random_state(rng), cfg=IntegratorConfig(dt=1e-4, record_every=50), duration=0.5)
    assert traj.energy_drift_rel() <= 1e-9


def test_damping_dissipates(rng):
    p = random_params(rng)
    traj = simulate(p, random_state(rng), LinearDamping(0.5, 0.5), None, IntegratorConfig(dt=1e-3), 1.0)
    assert np.all(np.diff(traj.energy) < 0.0)


def test_flapping_smoke_run():
    from fwmav.config import load_builtin

    cfg = load_builtin("hover")
    traj = simulate(
        cfg.inertial_params(), cfg.initial_state(), cfg.force_provider(), cfg.gait_spec(),
        IntegratorConfig(dt=1e-4, record_every=100), duration=10.0,
    )
    assert len(traj) == 1001
    assert np.all(np.isfinite(traj.z)) and np.all(np.isfinite(traj.r_I))
    from fwmav.so3 import log_so3

    angles = [np.linalg.norm(log_so3(R)) for R in traj.R_WLB]
    assert 0.1 < max(angles) < 1.5

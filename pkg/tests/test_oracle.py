import numpy as np
import pytest

from fwmav import oracle
from fwmav.dynamics import ForceInputs, GaitSpec, LinearDamping, ReducedState, reduced_rhs
from fwmav.errors import ChartOverflow
from fwmav.integrator import IntegratorConfig, diagnostics, simulate
from fwmav.model import InertialParams, ShapeConfig, VelocityZ, reduced_lagrangian
from fwmav.sampling import random_params, random_rotation, random_state
from fwmav.so3 import exp_so3, hat

E_Z = np.array([0.0, 0.0, 1.0])


def plain_params(g=9.81):
    return InertialParams(1.0, 0.2, 0.3, [1.0, 2.0, 3.0], [0.1, 0.2, 0.25], [0.3, 0.1, 0.35], g=g)


def reduced_qddot(p, st, f=None):
    """Chart accelerations implied by the reduced equations at a chart centred on ``st``."""
    d = reduced_rhs(p, st, f)
    v = st.z.v
    w = st.z.w_B
    rdd = st.R_BI @ (np.cross(w, v) + d.z[0:3])
    return np.concatenate([d.z[3:6], rdd, d.z[6:9], d.z[9:12]])


def test_lagrangian_zero_at_rest():
    L = oracle.full_lagrangian(plain_params(), oracle.Chart(), np.zeros(12), np.zeros(12))
    assert L == 0.0


def test_lagrangian_matches_reduced(rng):
    for _ in range(100):
        p = random_params(rng)
        st = random_state(rng, vel_scale=2.0)
        L = oracle.full_lagrangian(p, *oracle.chart_from_state(st))
        assert abs(reduced_lagrangian(p, st.pose, st.z) - L) <= 1e-10 * max(1.0, abs(L))


def test_lagrangian_off_chart_centre(rng):
    # nonzero chart coordinates describe the state recovered by state_from_chart
    for _ in range(20):
        p = random_params(rng)
        chart = oracle.Chart(random_rotation(rng), random_rotation(rng), random_rotation(rng))
        q = rng.uniform(-0.8, 0.8, size=12)
        qd = rng.normal(size=12)
        st = oracle.state_from_chart(chart, q, qd)
        L = oracle.full_lagrangian(p, chart, q, qd)
        assert abs(reduced_lagrangian(p, st.pose, st.z) - L) <= 1e-10 * max(1.0, abs(L))


def test_lagrangian_invariant_under_left_action(rng):
    for _ in range(20):
        p = random_params(rng)
        chart, q, qd = oracle.chart_from_state(random_state(rng))
        R1 = random_rotation(rng)
        moved = oracle.Chart(R1 @ chart.R_BI0, chart.R_WLB0, chart.R_WRB0)
        q1, qd1 = q.copy(), qd.copy()
        q1[3:6] = R1 @ q[3:6]
        qd1[3:6] = R1 @ qd[3:6]
        L0 = oracle.full_lagrangian(p, chart, q, qd)
        assert oracle.full_lagrangian(p, moved, q1, qd1, up=R1 @ E_Z) == pytest.approx(L0, rel=1e-12, abs=1e-12)
        # rotations about the vertical keep L even with gravity fixed
        Rz = exp_so3(rng.uniform(-3, 3) * E_Z)
        moved = oracle.Chart(Rz @ chart.R_BI0, chart.R_WLB0, chart.R_WRB0)
        q1[3:6] = Rz @ q[3:6]
        qd1[3:6] = Rz @ qd[3:6]
        assert oracle.full_lagrangian(p, moved, q1, qd1) == pytest.approx(L0, rel=1e-12, abs=1e-12)


def test_chart_overflow():
    q = np.zeros(12)
    q[6:9] = [0.0, np.pi / 2, 0.0]
    with pytest.raises(ChartOverflow):
        oracle.full_lagrangian(plain_params(), oracle.Chart(), q, np.zeros(12))
    with pytest.raises(ChartOverflow):
        oracle.oracle_accel(plain_params(), oracle.Chart(), q, np.zeros(12))


def test_accel_free_fall():
    p = plain_params()
    qdd = oracle.oracle_accel(p, oracle.Chart(), np.r_[0, 0, 0, 0, 0, 5.0, np.zeros(6)], np.zeros(12))
    assert np.allclose(qdd[3:6], [0.0, 0.0, -p.g], atol=1e-7)
    assert np.allclose(qdd[[0, 1, 2, 6, 7, 8, 9, 10, 11]], 0.0, atol=1e-7)


def test_accel_principal_spin():
    p = plain_params(g=0.0)
    qd = np.zeros(12)
    qd[0:3] = [0.0, 1.5, 0.0]
    qdd = oracle.oracle_accel(p, oracle.Chart(), np.zeros(12), qd)
    assert np.allclose(qdd, 0.0, atol=1e-7)


def test_accel_matches_reduced_rhs(rng):
    for k in range(20):
        p = random_params(rng)
        st = random_state(rng, vel_scale=2.0)
        f = ForceInputs(*rng.normal(size=(6, 3))) if k % 2 else None
        chart, q, qd = oracle.chart_from_state(st)
        qdd = oracle.oracle_accel(p, chart, q, qd, f)
        ref = reduced_qddot(p, st, f)
        assert np.max(np.abs(qdd - ref)) <= 1e-5 * max(1.0, np.max(np.abs(ref)))


def test_accel_accepts_load_vector(rng):
    p = random_params(rng)
    chart, q, qd = oracle.chart_from_state(random_state(rng))
    f = ForceInputs(*rng.normal(size=(6, 3)))
    a = oracle.oracle_accel(p, chart, q, qd, f)
    b = oracle.oracle_accel(p, chart, q, qd, f.generalized())
    assert np.array_equal(a, b)


def test_recentering_preserves_state(rng):
    R0 = np.stack([random_rotation(rng) for _ in range(3)])[None]
    q = rng.normal(size=(1, 12))
    for sl in (slice(0, 3), slice(6, 9), slice(9, 12)):
        q[0, sl] *= 1.3 / np.linalg.norm(q[0, sl])
    qd = rng.normal(size=(1, 12))
    before = oracle._physical(R0, q, qd)
    R0c, qc, qdc = R0.copy(), q.copy(), qd.copy()
    assert oracle._recenter(R0c, qc, qdc).all()
    assert np.array_equal(qc[0, [0, 1, 2, 6, 7, 8, 9, 10, 11]], np.zeros(9))
    after = oracle._physical(R0c, qc, qdc)
    for a, b in zip(before, after):
        assert np.max(np.abs(a - b)) <= 1e-12
    p = random_params(rng)
    sa = ReducedState.from_inertial(before[0][0], before[3][0], ShapeConfig(before[1][0], before[2][0]), VelocityZ.from_vector(before[4][0]))
    sb = ReducedState.from_inertial(after[0][0], after[3][0], ShapeConfig(after[1][0], after[2][0]), VelocityZ.from_vector(after[4][0]))
    assert np.allclose(diagnostics(p, sa), diagnostics(p, sb), rtol=1e-12, atol=1e-12)


def test_short_run_matches_reduced(rng):
    p = random_params(rng)
    st = random_state(rng, vel_scale=2.0)
    gait = GaitSpec(amplitude=0.5, frequency=10.0, phase_R=0.7)
    prov = LinearDamping(0.2, 0.1)
    red = simulate(p, st, prov, gait, IntegratorConfig(dt=1e-3, record_every=10), 0.1)
    orc = oracle.oracle_simulate(p, st, gait=gait, provider=prov, dt=1e-3, duration=0.1, record_every=10)
    assert len(orc) == len(red) == 11
    cmp = oracle.compare(red, orc)
    assert cmp.max_rel <= 1e-6
    name, t = cmp.worst()
    assert name in oracle.STATE_COMPONENTS and 0.0 <= t <= 0.1


def test_oracle_recenters_and_conserves(rng):
    p = plain_params()
    z = VelocityZ(np.zeros(3), [4.0, 1.0, -3.0], [0.0, 5.0, 0.0], np.zeros(3))
    st = ReducedState.from_inertial(np.eye(3), np.zeros(3), ShapeConfig.identity(), z)
    orc = oracle.oracle_simulate(p, st, dt=1e-3, duration=1.0, record_every=50)
    assert orc.recenterings > 3
    assert orc.energy_drift_rel() <= 1e-7
    assert orc.pi_z_drift_rel() <= 1e-7


def test_compare_requires_same_times(rng):
    p = random_params(rng)
    st = random_state(rng)
    red = simulate(p, st, cfg=IntegratorConfig(dt=1e-3), duration=0.01)
    orc = oracle.oracle_simulate(p, st, dt=1e-3, duration=0.02)
    with pytest.raises(ValueError):
        oracle.compare(red, orc)


def test_fd_check_linear_and_sign_flip(rng):
    a = rng.normal(size=5)
    x = rng.normal(size=5)
    assert oracle.fd_check(lambda y: a @ y, np.zeros(5), a) <= 1e-12
    # away from the origin cancellation leaves eps |f| / h of rounding
    assert oracle.fd_check(lambda y: a @ y, x, a) <= 1e-9
    assert oracle.fd_check(lambda y: a @ y, x, -a) == pytest.approx(2.0, rel=1e-6)


def test_fd_check_detects_corrupted_shape_gradient(rng, monkeypatch):
    import fwmav.model as model

    p = random_params(rng)
    st = random_state(rng)
    good = oracle.gradient_errors(p, st.pose, st.z)
    assert max(good.values()) <= 1e-6
    original = model.shape_gradient
    monkeypatch.setattr(oracle, "shape_gradient", lambda *a: -original(*a))
    bad = oracle.gradient_errors(p, st.pose, st.z)
    assert bad["shape_gradient_left"] > 0.5

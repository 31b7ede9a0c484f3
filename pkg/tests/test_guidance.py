import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mavland.estimator import initial_state
from mavland.guidance import (
    GimbalAngles,
    Guidance,
    GuidanceGains,
    StabilityMonitor,
    accel_to_attitude,
    approach_acceleration,
    closing_acceleration,
    los_rate,
    pid_acceleration,
    pn_acceleration,
    point_gimbal,
    select_phase,
    vertical_command,
)
from mavland.phases import MissionPhase as P
from mavland.vehicles import MavParams, translational_accel
from oracles import intercept

# rounded so squared norms cannot underflow
vec = st.lists(st.floats(-50, 50, allow_nan=False).map(lambda x: round(x, 9)), min_size=3, max_size=3).map(np.array)
G = GuidanceGains()


def test_pn_example():
    a, deg = pn_acceleration([10.0, 0, 0], [0, 1.0, 0], 3.0)
    assert not deg
    np.testing.assert_allclose(a, [0, 0.3, 0], atol=1e-15)
    np.testing.assert_allclose(los_rate([10.0, 0, 0], [0, 1.0, 0]), [0, 0, 0.1])


def test_pn_pure_closing_is_zero():
    a, _ = pn_acceleration([5.0, 2.0, 1.0], [-10.0, -4.0, -2.0], 3.0)
    np.testing.assert_allclose(a, 0.0, atol=1e-12)


def test_pn_degenerate():
    a, deg = pn_acceleration([0.05, 0, 0], [1.0, 2.0, 0], 3.0)
    assert deg and not a.any()
    _, deg = pn_acceleration([0.1, 0, 0], [1.0, 2.0, 0], 3.0)
    assert deg


@given(vec, vec)
def test_pn_orthogonal_to_los(u, udot):
    if np.linalg.norm(u) <= 0.1:
        return
    a, _ = pn_acceleration(u, udot, 3.0)
    assert abs(a @ u) <= 1e-9 * max(np.linalg.norm(a) * np.linalg.norm(u), 1e-300)
    om = los_rate(u, udot)
    scale = np.linalg.norm(om)
    assert abs(om @ u) <= 1e-9 * scale * np.linalg.norm(u) + 1e-300
    assert abs(om @ udot) <= 1e-9 * scale * np.linalg.norm(udot) + 1e-300


@given(vec, vec, st.floats(0.1, 10))
def test_pn_homogeneity(u, udot, k):
    if np.linalg.norm(u) <= 0.1:
        return
    a1, _ = pn_acceleration(u, udot, 3.0)
    a2, _ = pn_acceleration(u, k * udot, 3.0)
    np.testing.assert_allclose(a2, k * k * a1, rtol=1e-9, atol=1e-12)


def test_pn_magnitude_when_u_perp_omega():
    u, udot = np.array([3.0, 4.0, 0.0]), np.array([1.0, -2.0, 0.0])
    a, _ = pn_acceleration(u, udot, 2.0)
    expected = 2.0 * np.linalg.norm(udot) * np.linalg.norm(los_rate(u, udot))
    assert np.linalg.norm(a) == pytest.approx(expected, rel=1e-12)


def test_closing_examples():
    assert not closing_acceleration(np.zeros(3), np.zeros(3), 0.3, 0.8).any()
    np.testing.assert_allclose(closing_acceleration([30.0, 0, 0], np.zeros(3), 0.5, 0.0), [15, 0, 0])


def test_closing_projection_keeps_los_component():
    u, ud = np.array([3.0, 4.0, 0.0]), np.array([1.0, 0.0, 2.0])
    full = closing_acceleration(u, ud, 0.3, 0.8)
    proj = closing_acceleration(u, ud, 0.3, 0.8, project=True)
    assert np.linalg.norm(np.cross(proj, u)) < 1e-12
    assert proj @ u == pytest.approx(full @ u)


@given(vec, vec)
def test_approach_z_zeroed(u, udot):
    assert approach_acceleration(u, udot, G)[2] == 0.0


def test_intercept_from_30m():
    ranges, omegas = intercept((-30.0, 0.0, 0.0), (0, 0, 0), (0, 0, 0), (14.0, 0, 0))
    assert ranges.min() < 0.5


@pytest.mark.parametrize("angle", [-0.4, 0.15, 0.5])
def test_intercept_los_rate_decays(angle):
    p0 = (-30 * math.cos(angle), 30 * math.sin(angle), 0.0)
    ranges, omegas = intercept(p0, (0, 0, 0), (0, 0, 0), (14.0, 0, 0))
    assert ranges.min() < 0.5
    k_sw = int(np.argmax(ranges < G.switch_in))
    tail = omegas[k_sw // 2 : k_sw + 1]
    assert np.all(np.diff(tail) <= 1e-12)


# -- attitude inversion ----------------------------------------------------------


def test_hover_attitude():
    th, ph, T = accel_to_attitude(np.zeros(3), np.zeros(3), 3.4, 0.06, 9.81)
    assert (th, ph) == (0.0, 0.0)
    assert T == pytest.approx(3.4 * 9.81)


def test_saturation():
    th, ph, T = accel_to_attitude([9.81, 0, 0], np.zeros(3), 3.4, 0.0, 9.81, limit=math.pi / 2)
    assert th == pytest.approx(-math.pi / 4)
    th, ph, T = accel_to_attitude([9.81, 0, 0], np.zeros(3), 3.4, 0.0, 9.81)
    assert th == pytest.approx(-math.radians(30))
    assert T == pytest.approx(3.4 * 9.81 / math.cos(math.radians(30)))


@given(
    st.floats(-3, 3), st.floats(-3, 3),
    st.floats(-15, 15), st.floats(-15, 15), st.floats(-2, 2),
    st.floats(-math.pi, math.pi),
)
@settings(max_examples=300)
def test_attitude_round_trip(ax, ay, vx, vy, vz, psi):
    params = MavParams()
    v = np.array([vx, vy, vz])
    th, ph, T = accel_to_attitude([ax, ay, 0.0], v, params.mass, params.kd, params.g, psi, limit=math.pi / 2.5)
    a = translational_accel((ph, th, psi), T, v, params)
    np.testing.assert_allclose(a[:2], [ax, ay], atol=1e-9)


# -- landing ---------------------------------------------------------------------


def test_pid_examples():
    a, i = pid_acceleration(np.zeros(3), np.zeros(3), np.zeros(3), G, 0.01)
    assert not a.any() and not i.any()
    g = GuidanceGains(kp=2.0, ki=0.0, kd=0.0)
    a, _ = pid_acceleration([1.0, -1.0, 0.0], np.zeros(3), np.zeros(3), g, 0.01)
    np.testing.assert_allclose(a, [2, -2, 0])


def test_pid_integral_riemann_sum():
    g = GuidanceGains(kp=0.0, ki=0.5, kd=0.0)
    integral = np.zeros(3)
    for _ in range(100):
        a, integral = pid_acceleration([1.0, 0, 0], np.zeros(3), integral, g, 0.01)
    np.testing.assert_allclose(a, [0.5, 0, 0], rtol=1e-12)


def test_pid_integral_clamped():
    integral = np.zeros(3)
    for _ in range(1000):
        _, integral = pid_acceleration([5.0, -5.0, 0], np.zeros(3), integral, G, 0.01)
    np.testing.assert_allclose(integral[:2], [2.0, -2.0])


# -- phases ----------------------------------------------------------------------


@pytest.mark.parametrize(
    "cur,dist,stab,h,expected",
    [
        (P.APPROACH, 5.9, False, 4.0, P.LANDING),
        (P.APPROACH, 6.0, False, 4.0, P.APPROACH),
        (P.LANDING, 6.5, False, 4.0, P.LANDING),
        (P.LANDING, 7.1, True, 4.0, P.APPROACH),
        (P.LANDING, 0.1, True, 4.0, P.DESCENT),
        (P.DESCENT, 0.1, False, 0.19, P.DISARMED),
        (P.DESCENT, 0.1, False, 0.21, P.DESCENT),
        (P.DESCENT, 9.0, False, 3.0, P.DESCENT),
        (P.DISARMED, 50.0, False, 9.0, P.DISARMED),
    ],
)
def test_select_phase(cur, dist, stab, h, expected):
    assert select_phase(cur, dist, stab, h, G) is expected


@given(st.lists(st.floats(0, 20), min_size=2, max_size=200))
def test_no_chattering(distances):
    # each Approach<->Landing switch needs a full crossing of the [6, 7] band
    phase, last = P.APPROACH, None
    for d in distances:
        new = select_phase(phase, d, False, 4.0, G)
        if new is not phase:
            if last is not None:
                lo, hi = min(last, d), max(last, d)
                assert lo < G.switch_in and hi > G.switch_out
            last = d
        phase = new


def test_gains_validation():
    with pytest.raises(ValueError):
        GuidanceGains(switch_in=7.0, switch_out=6.0)
    with pytest.raises(ValueError):
        GuidanceGains(pn_gain=0.0)
    with pytest.raises(ValueError):
        GuidanceGains(disarm_height=0.0)


def test_stability_monitor():
    m = StabilityMonitor(0.3, 0.5, 0.5)
    for _ in range(49):
        assert not m.update([0.1, 0, 0], [0.1, 0, 0], 0.01)
    assert m.update([0.1, 0, 0], [0.1, 0, 0], 0.01)
    assert not m.update([0.5, 0, 0], [0.1, 0, 0], 0.01)


def test_vertical_command():
    est = initial_state([0, 0, -4.0], np.zeros(3), [0, 0, -1.0])
    vc = vertical_command(P.APPROACH, est, 4.0, 0.75)
    assert vc.mode == "hold" and vc.z_ref == pytest.approx(-5.0)
    vc = vertical_command(P.DESCENT, est, 4.0, 0.75)
    assert vc.mode == "velocity" and vc.vz == pytest.approx(0.75)
    assert vertical_command(P.DISARMED, est, 4.0, 0.75).mode == "off"


def test_vertical_margin_and_cap():
    est = initial_state([0, 0, -4.0], np.zeros(3), [0, 0, 0.0])  # height std sqrt(2)
    vc = vertical_command(P.APPROACH, est, 4.0, 0.75, margin_sigma=1.0)
    assert vc.z_ref == pytest.approx(-4.0 - math.sqrt(2.0))
    vc = vertical_command(P.APPROACH, est, 4.0, 0.75, margin_sigma=10.0, max_height=6.5)
    assert vc.z_ref == pytest.approx(-6.5)


def test_disarmed_command_has_zero_thrust():
    g = Guidance(G, 3.4, 0.06, 9.81, 4.0, phase=P.DISARMED)
    est = initial_state(np.zeros(3), np.zeros(3), np.zeros(3))
    assert g.command(est, 0.01).thrust == 0.0


def test_disarm_requires_estimated_height():
    g = Guidance(G, 3.4, 0.06, 9.81, 4.0, phase=P.DESCENT)
    est = initial_state([0, 0, -0.25], np.zeros(3), np.zeros(3))
    assert g.update_phase(est, 0.01) is P.DESCENT
    est = initial_state([0, 0, -0.2], np.zeros(3), np.zeros(3))
    assert g.update_phase(est, 0.01) is P.DISARMED


# -- gimbal ------------------------------------------------------------------------


def test_gimbal_aligned_unchanged():
    cur = GimbalAngles(0.3, -0.6)
    d = np.array([math.cos(-0.6) * math.cos(0.3), math.cos(-0.6) * math.sin(0.3), -math.sin(-0.6)])
    new = point_gimbal(cur, -5.0 * d, 0.01, math.pi)
    assert new.pan == pytest.approx(0.3, abs=1e-12) and new.tilt == pytest.approx(-0.6, abs=1e-12)


def test_gimbal_slew_step():
    new = point_gimbal(GimbalAngles(0.0, 0.0), [0.0, 0.0, -3.0], 0.01, math.radians(180))
    assert new.tilt == pytest.approx(-math.radians(1.8))


def test_gimbal_converges_down():
    rate = math.radians(180)
    g = GimbalAngles(0.0, 0.0)
    for _ in range(50):  # 0.5 s = 90 deg / 180 deg/s
        g = point_gimbal(g, [0.0, 0.0, -3.0], 0.01, rate)
    assert g.tilt == pytest.approx(-math.pi / 2, abs=1e-12)


def test_gimbal_degenerate_holds():
    cur = GimbalAngles(0.2, -0.3)
    assert point_gimbal(cur, [0.01, 0.0, 0.0], 0.01, 1.0) == cur

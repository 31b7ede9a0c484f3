"""Approach and landing guidance.

Approach: proportional navigation normal to the line of sight plus a PD
closing term. Landing: PID on the relative position. The horizontal
acceleration demand is turned into pitch/roll/thrust with quadratic drag
compensation. Vertical motion is commanded separately (altitude hold, then a
constant descent rate, then disarm).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from mavland.estimator import FilterState
from mavland.frames import boresight_angles, wrap_angle
from mavland.phases import MissionPhase

DEGENERATE_RANGE = 0.1  # [m]


@dataclass
class GuidanceGains:
    pn_gain: float = 3.0
    kp_par: float = 0.3
    kd_par: float = 0.8
    kp: float = 2.0
    ki: float = 0.3
    kd: float = 1.5
    switch_in: float = 6.0  # [m]
    switch_out: float = 7.0  # [m]
    descend_vz: float = 0.75  # [m/s], positive down
    disarm_height: float = 0.2  # [m]
    attitude_limit_deg: float = 30.0
    integral_limit: float = 2.0  # [m s] per axis
    stabilize_pos: float = 0.3  # [m]
    stabilize_vel: float = 0.5  # [m/s]
    stabilize_time: float = 0.5  # [s]
    project_closing: bool = False
    gimbal_rate_deg: float = 180.0  # [deg/s]
    yaw_min_speed: float = 1.0  # [m/s] below this the yaw command is held
    altitude_margin_sigma: float = 2.0  # extra hold height per std of estimated height
    max_hold_height: float = 6.5  # [m] cap on cruise height plus margin

    def __post_init__(self):
        if not self.pn_gain > 0:
            raise ValueError("pn_gain must be positive")
        if not self.switch_out > self.switch_in > 0:
            raise ValueError("need switch_out > switch_in > 0")
        if not self.disarm_height > 0:
            raise ValueError("disarm_height must be positive")
        if self.altitude_margin_sigma < 0:
            raise ValueError("altitude_margin_sigma must be non-negative")

    @property
    def attitude_limit(self) -> float:
        return math.radians(self.attitude_limit_deg)


@dataclass(frozen=True)
class GuidanceCommand:
    """Attitude/thrust demand plus the vertical-channel request.

    ``altitude_hold`` selects position hold at ``z_ref`` (NED); otherwise the
    vertical channel tracks ``vz_cmd``. ``thrust == 0`` means disarmed.
    """

    theta: float
    phi: float
    psi: float
    thrust: float
    vz_cmd: float
    altitude_hold: bool
    z_ref: float
    phase: MissionPhase


@dataclass(frozen=True)
class GimbalAngles:
    pan: float = 0.0
    tilt: float = 0.0


# -- approach --------------------------------------------------------------


def _cross(a, b) -> np.ndarray:
    return np.array(
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    )


def los_rate(u, udot) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return _cross(u, udot) / (u @ u)


def pn_acceleration(u, udot, lam: float, eps: float = DEGENERATE_RANGE):
    """PN acceleration normal to the LOS ``u = p_a - p_m``.

    Returns ``(a_perp, degenerate)``; when ``|u| <= eps`` the command is zero
    and ``degenerate`` is True.
    """
    u = np.asarray(u, dtype=float)
    udot = np.asarray(udot, dtype=float)
    r = math.sqrt(u @ u)
    if r <= eps:
        return np.zeros(3), True
    omega = _cross(u, udot) / (r * r)
    a = -lam * math.sqrt(udot @ udot) * _cross(u / r, omega)
    return a, False


def closing_acceleration(u, udot, kp_par: float, kd_par: float, project: bool = False):
    """PD closing term ``kp*u + kd*udot``, optionally projected on the LOS."""
    u = np.asarray(u, dtype=float)
    a = kp_par * u + kd_par * np.asarray(udot, dtype=float)
    if project:
        r2 = u @ u
        if r2 == 0.0:
            return np.zeros(3)
        a = (a @ u) / r2 * u
    return a


def approach_acceleration(u, udot, gains: GuidanceGains) -> np.ndarray:
    a_perp, _ = pn_acceleration(u, udot, gains.pn_gain)
    a = a_perp + closing_acceleration(
        u, udot, gains.kp_par, gains.kd_par, gains.project_closing
    )
    a[2] = 0.0
    return a


# -- landing ---------------------------------------------------------------


def pid_acceleration(u, udot, integral, gains: GuidanceGains, dt: float):
    """Horizontal PID demand; returns ``(a, new_integral)``.

    The integral advances by ``u*dt`` before use and is clamped per axis.
    """
    u = np.asarray(u, dtype=float)
    lim = gains.integral_limit
    new_integral = np.clip(np.asarray(integral, dtype=float) + u * dt, -lim, lim)
    a = gains.kp * u + gains.ki * new_integral + gains.kd * np.asarray(udot, dtype=float)
    a[2] = 0.0
    return a, new_integral


# -- acceleration to attitude -----------------------------------------------


def accel_to_attitude(
    a_cmd_xy,
    v_m,
    m: float,
    kd: float,
    g: float,
    psi: float = 0.0,
    limit: float = math.radians(30.0),
):
    """Pitch, roll and thrust producing a horizontal acceleration at
    constant altitude, compensating per-axis quadratic drag.

    The required NED horizontal force is rotated into the yaw-aligned frame
    before inversion, so any ``psi`` is handled exactly.
    """
    fx = m * a_cmd_xy[0] + kd * v_m[0] * abs(v_m[0])
    fy = m * a_cmd_xy[1] + kd * v_m[1] * abs(v_m[1])
    c, s = math.cos(psi), math.sin(psi)
    fxb = c * fx + s * fy
    fyb = -s * fx + c * fy
    mg = m * g
    theta = -math.atan(fxb / mg)
    theta = min(max(theta, -limit), limit)
    phi = math.atan(math.cos(theta) * fyb / mg)
    phi = min(max(phi, -limit), limit)
    thrust = mg / (math.cos(phi) * math.cos(theta))
    return theta, phi, thrust


# -- phase logic -------------------------------------------------------------


def select_phase(
    current: MissionPhase,
    horizontal_distance: float,
    stabilized: bool,
    height_above_pad: float,
    gains: GuidanceGains,
) -> MissionPhase:
    if current is MissionPhase.APPROACH:
        if horizontal_distance < gains.switch_in:
            return MissionPhase.LANDING
    elif current is MissionPhase.LANDING:
        if horizontal_distance > gains.switch_out:
            return MissionPhase.APPROACH
        if stabilized:
            return MissionPhase.DESCENT
    elif current is MissionPhase.DESCENT:
        if height_above_pad <= gains.disarm_height:
            return MissionPhase.DISARMED
    return current


@dataclass
class StabilityMonitor:
    """Tracks how long the MAV has stayed settled over the pad."""

    pos_tol: float
    vel_tol: float
    hold_time: float
    elapsed: float = 0.0

    def update(self, u, udot, dt: float) -> bool:
        if math.hypot(u[0], u[1]) < self.pos_tol and math.hypot(udot[0], udot[1]) < self.vel_tol:
            self.elapsed += dt
        else:
            self.elapsed = 0.0
        return self.elapsed >= self.hold_time - 1e-9

    def reset(self):
        self.elapsed = 0.0


@dataclass(frozen=True)
class VerticalCommand:
    mode: str  # "hold", "velocity" or "off"
    z_ref: float = math.nan
    vz: float = 0.0


def height_std(est: FilterState) -> float:
    """Standard deviation of the estimated MAV height above the pad."""
    P = est.covariance
    var = P[2, 2] + P[11, 11] - 2.0 * P[2, 11]
    return math.sqrt(max(var, 0.0))


def vertical_command(
    phase: MissionPhase,
    est: FilterState,
    cruise_altitude: float,
    descend_vz: float,
    margin_sigma: float = 0.0,
    max_height: float = math.inf,
) -> VerticalCommand:
    """Altitude hold ``cruise_altitude`` above the estimated pad until
    descent, then a constant sink rate toward the pad; nothing once
    disarmed.

    The hold height grows by ``margin_sigma`` standard deviations of the
    estimated height, so a pad altitude known only from phone GPS (metres of
    vertical error) does not pull the MAV into the ground. ``max_height``
    caps the result so the tag stays within camera range.
    """
    if phase in (MissionPhase.APPROACH, MissionPhase.LANDING):
        height = cruise_altitude + margin_sigma * height_std(est)
        height = max(min(height, max_height), cruise_altitude)
        return VerticalCommand("hold", z_ref=float(est.p_a[2]) - height)
    if phase is MissionPhase.DESCENT:
        # sink rate is relative to the pad, which may be climbing
        return VerticalCommand("velocity", vz=descend_vz + float(est.v_a[2]))
    return VerticalCommand("off")


def point_gimbal(
    current: GimbalAngles, los_est, dt: float, rate_limit: float, eps: float = DEGENERATE_RANGE
) -> GimbalAngles:
    """Slew the gimbal toward the pad.

    ``los_est`` is the estimated MAV position relative to the pad
    (``p_m - p_a``), so the optical axis is driven toward ``-los_est``.
    Each axis moves at most ``rate_limit * dt``.
    """
    d = -np.asarray(los_est, dtype=float)
    if math.sqrt(d @ d) <= eps:
        return current
    pan_t, tilt_t = boresight_angles(d)
    step = rate_limit * dt
    dpan = wrap_angle(pan_t - current.pan)
    if math.hypot(d[0], d[1]) <= 1e-9:
        dpan = 0.0  # pan undefined straight down
    dtilt = tilt_t - current.tilt
    pan = wrap_angle(current.pan + min(max(dpan, -step), step))
    tilt = current.tilt + min(max(dtilt, -step), step)
    return GimbalAngles(pan, tilt)


# -- controller ----------------------------------------------------------------


@dataclass
class Guidance:
    """Phase machine plus controller memory for one simulation.

    Consumes only filter estimates; ``cruise_altitude`` is the hold height
    above the estimated pad.
    """

    gains: GuidanceGains
    mass: float
    kd: float
    g: float
    cruise_altitude: float
    phase: MissionPhase = MissionPhase.APPROACH
    integral: np.ndarray = field(default_factory=lambda: np.zeros(3))
    psi: float = 0.0
    monitor: StabilityMonitor = None

    def __post_init__(self):
        if self.monitor is None:
            self.monitor = StabilityMonitor(
                self.gains.stabilize_pos, self.gains.stabilize_vel, self.gains.stabilize_time
            )

    def update_phase(self, est: FilterState, dt: float) -> MissionPhase:
        u, udot = est.los
        stabilized = False
        if self.phase is MissionPhase.LANDING:
            stabilized = self.monitor.update(u, udot, dt)
        height = float(est.p_a[2] - est.p_m[2])
        new = select_phase(self.phase, math.hypot(u[0], u[1]), stabilized, height, self.gains)
        if new is not self.phase:
            if new is MissionPhase.LANDING:
                self.integral = np.zeros(3)
                self.monitor.reset()
            self.phase = new
        return new

    def command(self, est: FilterState, dt: float) -> GuidanceCommand:
        gains = self.gains
        if self.phase is MissionPhase.DISARMED:
            return GuidanceCommand(0.0, 0.0, self.psi, 0.0, 0.0, False, math.nan, self.phase)
        u, udot = est.los
        va = est.v_a
        if math.hypot(va[0], va[1]) > gains.yaw_min_speed:
            self.psi = math.atan2(va[1], va[0])
        if self.phase is MissionPhase.APPROACH:
            a = approach_acceleration(u, udot, gains)
        else:
            a, self.integral = pid_acceleration(u, udot, self.integral, gains, dt)
        theta, phi, thrust = accel_to_attitude(
            a, est.v_m, self.mass, self.kd, self.g, self.psi, gains.attitude_limit
        )
        vc = vertical_command(
            self.phase, est, self.cruise_altitude, gains.descend_vz,
            gains.altitude_margin_sigma, gains.max_hold_height,
        )
        return GuidanceCommand(
            theta, phi, self.psi, thrust, vc.vz, vc.mode == "hold", vc.z_ref, self.phase
        )

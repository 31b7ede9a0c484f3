"""Ground-truth vehicle models.

The MAV is a translational point mass with per-axis quadratic drag. Its
attitude follows the command through a first-order lag standing in for the
autopilot's inner loop, and its vertical channel is the autopilot's own
altitude/velocity tracker. The ground vehicle follows a parametric profile of
straight and constant-turn-rate segments with linear speed and grade ramps.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace

import numpy as np

from mavland.frames import rotation_from_euler, wrap_angle

GRAVITY = 9.81


@dataclass(frozen=True)
class MavParams:
    mass: float = 3.4  # [kg]
    kd: float = 0.06  # [N s^2/m^2]
    g: float = GRAVITY
    tau_att: float = 0.15  # [s]
    tau_z: float = 0.3  # [s]
    k_alt: float = 1.0  # [1/s] altitude-hold position gain
    vz_max: float = 3.0  # [m/s]


@dataclass(frozen=True)
class MavTruth:
    p: np.ndarray
    v: np.ndarray
    attitude: tuple = (0.0, 0.0, 0.0)  # (phi, theta, psi)
    params: MavParams = field(default_factory=MavParams)


def drag_force(v, kd: float) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return -kd * v * np.abs(v)


def translational_accel(attitude, thrust: float, v, params: MavParams) -> np.ndarray:
    """NED acceleration from gravity, thrust along -z body and drag."""
    phi, theta, psi = attitude
    R = rotation_from_euler(phi, theta, psi)
    f = np.array([0.0, 0.0, params.mass * params.g]) - R[:, 2] * thrust
    return (f + drag_force(v, params.kd)) / params.mass


def _derivative(x, cmd, target, params: MavParams):
    # x = [px, py, pz, vx, vy, vz, phi, theta, psi]; plain floats for speed
    vx, vy, vz, phi, theta, psi = x[3], x[4], x[5], x[6], x[7], x[8]
    m, kd, T = params.mass, params.kd, cmd.thrust
    cf, sf = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(psi), math.sin(psi)
    # third column of the body-to-NED rotation (body z axis)
    bx = cf * st * cp + sf * sp
    by = cf * st * sp - sf * cp
    bz = cf * ct
    ax = (-bx * T - kd * vx * abs(vx)) / m
    ay = (-by * T - kd * vy * abs(vy)) / m
    az = params.g + (-bz * T - kd * vz * abs(vz)) / m
    if T > 0.0:
        if cmd.altitude_hold:
            vz_ref = params.k_alt * (cmd.z_ref - x[2])
            vz_ref = min(max(vz_ref, -params.vz_max), params.vz_max)
        else:
            vz_ref = cmd.vz_cmd
        az = (vz_ref - vz) / params.tau_z
    tau = params.tau_att
    return (
        vx, vy, vz, ax, ay, az,
        (target[0] - phi) / tau, (target[1] - theta) / tau, (target[2] - psi) / tau,
    )


def mav_step(s: MavTruth, cmd, dt: float) -> MavTruth:
    """Advance the MAV by ``dt`` with classical RK4.

    ``cmd`` needs ``theta``, ``phi``, ``psi``, ``thrust``, ``altitude_hold``,
    ``z_ref`` and ``vz_cmd`` attributes. Zero thrust disables the vertical
    tracker (free fall with drag).
    """
    if not 0.0 < dt <= 0.02:
        raise ValueError(f"dt must be in (0, 0.02], got {dt}")
    params = s.params
    phi, theta, psi = s.attitude
    # unwrap the yaw target next to the current yaw
    target = (cmd.phi, cmd.theta, psi + wrap_angle(cmd.psi - psi))
    x = (*(float(c) for c in s.p), *(float(c) for c in s.v), phi, theta, psi)
    h = 0.5 * dt
    k1 = _derivative(x, cmd, target, params)
    k2 = _derivative([a + h * b for a, b in zip(x, k1)], cmd, target, params)
    k3 = _derivative([a + h * b for a, b in zip(x, k2)], cmd, target, params)
    k4 = _derivative([a + dt * b for a, b in zip(x, k3)], cmd, target, params)
    c = dt / 6.0
    x = [a + c * (b1 + 2.0 * b2 + 2.0 * b3 + b4) for a, b1, b2, b3, b4 in zip(x, k1, k2, k3, k4)]
    att = (x[6], x[7], wrap_angle(x[8]))
    return replace(s, p=np.array(x[0:3]), v=np.array(x[3:6]), attitude=att)


# -- ground vehicle ------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    """One profile piece. Speed and grade ramp linearly from the previous
    segment's end values to ``target_speed`` / ``grade_pct`` over
    ``duration``; heading turns at a constant rate by ``turn_deg``
    (positive turns right, toward east from north)."""

    kind: str  # "straight" or "arc"
    duration: float
    target_speed: float
    grade_pct: float = 0.0
    turn_deg: float = 0.0

    def __post_init__(self):
        if self.kind not in ("straight", "arc"):
            raise ValueError(f"unknown segment type {self.kind!r}")
        if not self.duration > 0:
            raise ValueError("segment duration must be positive")
        if self.target_speed < 0:
            raise ValueError("segment speed must be non-negative")
        if self.kind == "straight" and self.turn_deg != 0.0:
            raise ValueError("straight segment cannot turn")


@dataclass(frozen=True)
class GvProfile:
    segments: tuple = ()
    start_position: tuple = (0.0, 0.0, 0.0)
    start_heading: float = 0.0  # [rad]
    start_speed: float = 0.0
    start_grade_pct: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if self.start_speed < 0:
            raise ValueError("start speed must be non-negative")
        object.__setattr__(self, "_table", _build_table(self))


@dataclass(frozen=True)
class GvTruth:
    p: np.ndarray
    v: np.ndarray
    a: np.ndarray
    heading: float
    speed: float


@dataclass(frozen=True)
class _Piece:
    t0: float
    duration: float  # inf for the trailing hold
    p0: np.ndarray
    psi0: float
    u0: float
    accel: float
    omega: float
    grade0: float
    grade_rate: float


_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _piece_offset(pc: _Piece, tau: float) -> np.ndarray:
    """Displacement from the piece start after ``tau`` seconds."""
    if tau <= 0.0:
        return np.zeros(3)
    if pc.omega == 0.0:
        dist = pc.u0 * tau + 0.5 * pc.accel * tau * tau
        dx, dy = dist * math.cos(pc.psi0), dist * math.sin(pc.psi0)
    else:
        s = 0.5 * tau * (_GL_X + 1.0)
        w = 0.5 * tau * _GL_W
        u = pc.u0 + pc.accel * s
        psi = pc.psi0 + pc.omega * s
        dx = float(w @ (u * np.cos(psi)))
        dy = float(w @ (u * np.sin(psi)))
    # vertical rate is -grade * speed, both linear in time
    g0, gr, u0, a = pc.grade0, pc.grade_rate, pc.u0, pc.accel
    dz = -(g0 * u0 * tau + (g0 * a + gr * u0) * tau**2 / 2 + gr * a * tau**3 / 3)
    return np.array([dx, dy, dz])


def _build_table(profile: GvProfile) -> list:
    table = []
    t = 0.0
    p = np.asarray(profile.start_position, dtype=float)
    psi = profile.start_heading
    u = profile.start_speed
    grade = profile.start_grade_pct / 100.0
    for seg in profile.segments:
        g1 = seg.grade_pct / 100.0
        pc = _Piece(
            t0=t,
            duration=seg.duration,
            p0=p,
            psi0=psi,
            u0=u,
            accel=(seg.target_speed - u) / seg.duration,
            omega=math.radians(seg.turn_deg) / seg.duration,
            grade0=grade,
            grade_rate=(g1 - grade) / seg.duration,
        )
        table.append(pc)
        p = p + _piece_offset(pc, seg.duration)
        t += seg.duration
        psi = wrap_angle(psi + math.radians(seg.turn_deg))
        u = seg.target_speed
        grade = g1
    table.append(_Piece(t, math.inf, p, psi, u, 0.0, 0.0, grade, 0.0))
    return table


def gv_state(profile: GvProfile, t: float) -> GvTruth:
    """Ground-vehicle pose, velocity and acceleration at time ``t``.

    Past the last segment the vehicle keeps its final speed, heading and
    grade.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    table = profile._table
    starts = [pc.t0 for pc in table]
    pc = table[bisect.bisect_right(starts, t) - 1]
    tau = t - pc.t0
    p = pc.p0 + _piece_offset(pc, tau)
    u = pc.u0 + pc.accel * tau
    psi = pc.psi0 + pc.omega * tau
    grade = pc.grade0 + pc.grade_rate * tau
    c, s = math.cos(psi), math.sin(psi)
    v = np.array([u * c, u * s, -grade * u])
    a = np.array(
        [
            pc.accel * c - pc.omega * u * s,
            pc.accel * s + pc.omega * u * c,
            -(pc.grade_rate * u + grade * pc.accel),
        ]
    )
    return GvTruth(p=p, v=v, a=a, heading=wrap_angle(psi), speed=u)


# -- drag identification ---------------------------------------------------------


def fit_drag_coefficient(samples, m: float, g: float = GRAVITY):
    """Least-squares drag coefficient from level-flight terminal speeds.

    ``samples`` holds ``(theta, v_t)`` pairs with pitch magnitude in radians.
    Minimizes ``sum((m g tan(theta_i) - kd v_i^2)^2)``; returns
    ``(kd, residual_rms)`` with the residual in newtons.
    """
    arr = np.asarray(samples, dtype=float).reshape(-1, 2)
    if arr.shape[0] == 0:
        raise ValueError("no samples")
    force = m * g * np.tan(np.abs(arr[:, 0]))
    v2 = arr[:, 1] ** 2
    denom = v2 @ v2
    if denom == 0.0:
        raise ValueError("all terminal speeds are zero")
    kd = float(v2 @ force / denom)
    rms = float(np.sqrt(np.mean((force - kd * v2) ** 2)))
    return kd, rms

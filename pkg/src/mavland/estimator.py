"""Linear Kalman filter over MAV and landing-pad kinematics.

State layout (18 entries, all NED)::

    [p_m, v_m, a_m, p_a, v_a, a_a]
     0:3  3:6  6:9  9:12 12:15 15:18

Each vehicle follows a constant-acceleration model driven by white jerk
noise. Measurements are linear in the state once expressed in NED.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from mavland.frames import GeodeticPoint, geodetic_to_ned, heading_speed_to_velocity
from mavland.phases import MissionPhase

log = logging.getLogger(__name__)

N_STATES = 18
MAV_POS = slice(0, 3)
MAV_VEL = slice(3, 6)
MAV_ACC = slice(6, 9)
PAD_POS = slice(9, 12)
PAD_VEL = slice(12, 15)
PAD_ACC = slice(15, 18)

GPS_HEADING_MIN_SPEED = 2.5  # [m/s]
_EYE = np.eye(N_STATES)


class SensorKind(str, Enum):
    INS_FULL = "InsFull"
    GV_GPS_WITH_HEADING = "GvGpsWithHeading"
    GV_GPS_POSITION_ONLY = "GvGpsPositionOnly"
    GIMBAL_CAMERA = "GimbalCamera"
    BOTTOM_CAMERA = "BottomCamera"
    GV_PHONE_IMU = "GvPhoneImu"


@dataclass(frozen=True)
class Measurement:
    """A linear observation ``z = H x + v`` with ``v ~ N(0, R)``."""

    kind: SensorKind
    z: np.ndarray
    H: np.ndarray
    R: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z, dtype=float))
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "R", R)
        m = z.shape[0]
        if z.ndim != 1 or H.shape != (m, N_STATES) or R.shape != (m, m):
            raise ValueError(
                f"dimension mismatch: z {z.shape}, H {H.shape}, R {R.shape}"
            )
        if not np.isfinite(z).all():
            raise ValueError("non-finite measurement")
        _check_covariance(R)

    @classmethod
    def _trusted(cls, kind, z, H, R, timestamp) -> Measurement:
        # for builders whose R is diagonal from validated positive stds
        out = object.__new__(cls)
        object.__setattr__(out, "kind", kind)
        object.__setattr__(out, "z", z)
        object.__setattr__(out, "H", H)
        object.__setattr__(out, "R", R)
        object.__setattr__(out, "timestamp", timestamp)
        return out

    def restamped(self, timestamp: float) -> Measurement:
        """Copy with a new timestamp (no re-validation)."""
        return Measurement._trusted(self.kind, self.z, self.H, self.R, timestamp)


def _check_covariance(R: np.ndarray) -> None:
    d = np.diagonal(R)
    if np.count_nonzero(R) == np.count_nonzero(d):
        # diagonal: positive entries suffice
        if not (d > 0).all():
            raise ValueError("R is not positive definite")
        return
    if np.abs(R - R.T).max() > 1e-12 * np.abs(R).max():
        raise ValueError("R is not symmetric")
    try:
        np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        raise ValueError("R is not positive definite") from None


@dataclass
class FilterState:
    mean: np.ndarray
    covariance: np.ndarray
    timestamp: float = 0.0

    @property
    def p_m(self):
        return self.mean[MAV_POS]

    @property
    def v_m(self):
        return self.mean[MAV_VEL]

    @property
    def a_m(self):
        return self.mean[MAV_ACC]

    @property
    def p_a(self):
        return self.mean[PAD_POS]

    @property
    def v_a(self):
        return self.mean[PAD_VEL]

    @property
    def a_a(self):
        return self.mean[PAD_ACC]

    @property
    def los(self):
        """Estimated line of sight ``p_a - p_m`` and its rate."""
        return self.p_a - self.p_m, self.v_a - self.v_m

    def copy(self) -> FilterState:
        return FilterState(self.mean.copy(), self.covariance.copy(), self.timestamp)


@dataclass(frozen=True)
class ProcessModel:
    F: np.ndarray
    Q: np.ndarray
    Ts: float
    q_wm: float
    q_wa: float


def kinematic_block(Ts: float) -> np.ndarray:
    """3x3 position/velocity/acceleration transition for one axis."""
    return np.array([[1.0, Ts, Ts**2 / 2], [0.0, 1.0, Ts], [0.0, 0.0, 1.0]])


def unit_process_noise(Ts: float) -> np.ndarray:
    """Per-axis ZOH noise covariance for unit jerk PSD."""
    return np.array(
        [
            [Ts**5 / 20, Ts**4 / 8, Ts**3 / 6],
            [Ts**4 / 8, Ts**3 / 3, Ts**2 / 2],
            [Ts**3 / 6, Ts**2 / 2, Ts],
        ]
    )


def make_process_model(Ts: float, q_wm: float, q_wa: float) -> ProcessModel:
    if not Ts > 0:
        raise ValueError(f"sampling period must be positive, got {Ts}")
    if q_wm < 0 or q_wa < 0:
        raise ValueError("noise PSDs must be non-negative")
    I3 = np.eye(3)
    Fv = np.kron(kinematic_block(Ts), I3)
    Q0 = np.kron(unit_process_noise(Ts), I3)
    F = np.kron(np.eye(2), Fv)
    Q = np.kron(np.diag([q_wm, q_wa]), Q0)
    return ProcessModel(F=F, Q=Q, Ts=Ts, q_wm=q_wm, q_wa=q_wa)


def predict(s: FilterState, m: ProcessModel) -> FilterState:
    F = m.F
    P = F @ s.covariance @ F.T + m.Q
    return FilterState(F @ s.mean, 0.5 * (P + P.T), s.timestamp + m.Ts)


def update(s: FilterState, z: Measurement) -> FilterState:
    """Kalman update with the Joseph-form covariance."""
    H, R = z.H, z.R
    P = s.covariance
    PHt = P @ H.T
    S = H @ PHt + R
    K = PHt @ np.linalg.inv(S)
    innov = z.z - H @ s.mean
    A = _EYE - K @ H
    Pn = A @ P @ A.T + K @ R @ K.T
    return FilterState(s.mean + K @ innov, 0.5 * (Pn + Pn.T), s.timestamp)


def _selector(cols) -> np.ndarray:
    H = np.zeros((len(cols), N_STATES))
    H[np.arange(len(cols)), cols] = 1.0
    return H


_H_INS = _selector(range(0, 9))
_H_GPS5 = _selector(range(9, 14))
_H_GPS3 = _selector(range(9, 12))
_H_IMU = _selector(range(15, 18))
_H_REL = np.hstack((np.eye(3), np.zeros((3, 6)), -np.eye(3), np.zeros((3, 6))))


def ins_measurement(
    p_m,
    v_m,
    a_m,
    phase: MissionPhase,
    *,
    pos_std: float = 0.05,
    vel_std_approach: float = 0.1,
    vel_std_landing: float = 10.0,
    acc_std: float = 0.1,
    inflate: bool = True,
    timestamp: float = 0.0,
) -> Measurement:
    """INS position, velocity and gravity-compensated acceleration.

    Outside the approach phase the declared velocity noise is inflated,
    because optical-flow velocity is unreliable above the moving pad.
    """
    vel_std = vel_std_approach
    if inflate and phase is not MissionPhase.APPROACH:
        vel_std = vel_std_landing
    z = np.concatenate((p_m, v_m, a_m)).astype(float)
    if z.shape != (9,):
        raise ValueError("INS sample needs three 3-vectors")
    return Measurement._trusted(
        SensorKind.INS_FULL, z, _H_INS, _ins_covariance(pos_std, vel_std, acc_std), timestamp
    )


@functools.lru_cache(maxsize=32)
def _ins_covariance(pos_std, vel_std, acc_std):
    if min(pos_std, vel_std, acc_std) <= 0:
        raise ValueError("INS noise stds must be positive")
    R = np.diag(np.repeat([pos_std**2, vel_std**2, acc_std**2], 3))
    R.flags.writeable = False
    return R


def gv_gps_measurement(
    p: GeodeticPoint,
    origin: GeodeticPoint,
    psi_a: float,
    U_a: float,
    R_dev,
    *,
    timestamp: float = 0.0,
    min_speed: float = GPS_HEADING_MIN_SPEED,
) -> Measurement:
    """Phone GPS fix of the pad: NED position plus, above ``min_speed``,
    planar velocity from course and speed.

    ``R_dev`` is the device-reported 5x5 covariance of
    ``(x, y, z, vx, vy)``; only its position block is used when the heading
    is discarded.
    """
    pos = geodetic_to_ned(p, origin)
    R_dev = np.asarray(R_dev, dtype=float)
    if U_a >= min_speed:
        vx, vy = heading_speed_to_velocity(psi_a, U_a)
        z = np.array([pos[0], pos[1], pos[2], vx, vy])
        return Measurement(
            SensorKind.GV_GPS_WITH_HEADING, z, _H_GPS5, R_dev[:5, :5], timestamp
        )
    return Measurement(
        SensorKind.GV_GPS_POSITION_ONLY, pos, _H_GPS3, R_dev[:3, :3], timestamp
    )


def _relative_measurement(kind, p_rel, R_frame, std, timestamp):
    z = np.asarray(R_frame, dtype=float) @ np.asarray(p_rel, dtype=float)
    return Measurement(kind, z, _H_REL, std**2 * np.eye(3), timestamp)


def gimbal_camera_measurement(
    p_rel_G, R_NG, *, std: float = 0.2, timestamp: float = 0.0
) -> Measurement:
    """Relative position ``p_m - p_a`` seen by the gimbal camera, in NED."""
    return _relative_measurement(SensorKind.GIMBAL_CAMERA, p_rel_G, R_NG, std, timestamp)


def bottom_camera_measurement(
    p_rel_C, R_NC, *, std: float = 0.3, timestamp: float = 0.0
) -> Measurement:
    return _relative_measurement(SensorKind.BOTTOM_CAMERA, p_rel_C, R_NC, std, timestamp)


def gv_imu_measurement(a_a, *, std: float = 0.6, timestamp: float = 0.0) -> Measurement:
    z = np.asarray(a_a, dtype=float)
    return Measurement(SensorKind.GV_PHONE_IMU, z, _H_IMU, std**2 * np.eye(3), timestamp)


def initial_state(
    p_m, v_m, p_a, v_a=(0.0, 0.0, 0.0), *, timestamp=0.0, pos_var=1.0, vel_var=1.0, acc_var=1.0
) -> FilterState:
    """Filter prior from the first INS and GPS samples, accelerations zero."""
    mean = np.zeros(N_STATES)
    mean[MAV_POS] = p_m
    mean[MAV_VEL] = v_m
    mean[PAD_POS] = p_a
    mean[PAD_VEL] = v_a
    diag = np.tile(np.repeat([pos_var, vel_var, acc_var], 3), 2)
    return FilterState(mean, np.diag(diag), timestamp)


def nees(s: FilterState, truth) -> float:
    """Normalized estimation error squared against a true state vector."""
    e = np.asarray(truth, dtype=float) - s.mean
    return float(e @ np.linalg.solve(s.covariance, e))


@dataclass
class KalmanFilter:
    """Forward-only filter owned by the simulation loop.

    Measurements stamped more than one prediction period before the filter
    time are dropped and counted; everything else is fused as current.
    """

    model: ProcessModel
    state: FilterState | None = None
    update_counts: dict = field(default_factory=dict)
    dropped: int = 0

    @property
    def initialized(self) -> bool:
        return self.state is not None

    def initialize(self, state: FilterState) -> None:
        self.state = state

    def predict(self) -> FilterState:
        self.state = predict(self.state, self.model)
        return self.state

    def process(self, z: Measurement) -> bool:
        if z.timestamp < self.state.timestamp - self.model.Ts - 1e-9:
            self.dropped += 1
            log.warning(
                "dropping stale %s measurement (t=%.3f, filter t=%.3f); %d dropped",
                z.kind.value, z.timestamp, self.state.timestamp, self.dropped,
            )
            return False
        self.state = update(self.state, z)
        self.update_counts[z.kind] = self.update_counts.get(z.kind, 0) + 1
        return True


def is_consistent_covariance(P, tol: float = 1e-9) -> bool:
    """Symmetric within ``tol`` relative and PSD within ``-tol * trace``."""
    P = np.asarray(P)
    scale = max(np.abs(P).max(), 1e-300)
    if np.abs(P - P.T).max() > tol * scale:
        return False
    return bool(np.linalg.eigvalsh(P).min() >= -tol * max(np.trace(P), 0.0))


__all__ = [
    "FilterState",
    "KalmanFilter",
    "Measurement",
    "ProcessModel",
    "SensorKind",
    "bottom_camera_measurement",
    "gimbal_camera_measurement",
    "gv_gps_measurement",
    "gv_imu_measurement",
    "initial_state",
    "ins_measurement",
    "make_process_model",
    "nees",
    "predict",
    "update",
]


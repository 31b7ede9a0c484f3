"""Simulated sensors: MAV INS, phone GPS/IMU on the pad, two cameras.

Every sensor samples ground truth on its own period, optionally delays the
result by a fixed latency, and draws noise from its own random stream.
Camera detections are purely geometric (range, field of view, apparent tag
size); no images are rendered.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from mavland.estimator import (
    Measurement,
    bottom_camera_measurement,
    gimbal_camera_measurement,
    gv_gps_measurement,
    gv_imu_measurement,
    ins_measurement,
)
from mavland.frames import (
    GeodeticPoint,
    bottom_camera_rotation,
    gimbal_rotation,
    ned_to_geodetic,
)
from mavland.phases import MissionPhase


@dataclass
class CameraModel:
    max_range: float
    fov_deg: float
    min_range: float = 0.0
    mount: str = "gimbal"  # "gimbal" or "bottom"
    noise_std: float = 0.02  # true noise [m]
    tag_size: float = 0.30  # [m]
    min_subtended_deg: float = 0.0

    def __post_init__(self):
        if not self.max_range > self.min_range >= 0:
            raise ValueError("camera needs max_range > min_range >= 0")
        if not 0 < self.fov_deg < 180:
            raise ValueError("camera fov must be in (0, 180) deg")
        if self.mount not in ("gimbal", "bottom"):
            raise ValueError(f"unknown camera mount {self.mount!r}")

    @property
    def half_fov(self) -> float:
        return math.radians(self.fov_deg) / 2

    def sees(self, rel_ned, R_frame) -> bool:
        """True if the tag at ``-rel_ned`` (camera to tag) is detectable.

        ``rel_ned`` is the camera position relative to the tag, in NED;
        ``R_frame`` maps camera-frame vectors into NED.
        """
        rng = math.sqrt(float(rel_ned @ rel_ned))
        if not self.min_range <= rng <= self.max_range or rng == 0.0:
            return False
        if self.min_subtended_deg > 0.0:
            subtended = 2.0 * math.atan(0.5 * self.tag_size / rng)
            if subtended < math.radians(self.min_subtended_deg):
                return False
        boresight = R_frame[:, 2]
        cos_off = -float(boresight @ rel_ned) / rng
        return cos_off >= math.cos(self.half_fov)


def default_gimbal_camera() -> CameraModel:
    return CameraModel(max_range=5.0, fov_deg=60.0, mount="gimbal", noise_std=0.02)


def default_bottom_camera() -> CameraModel:
    return CameraModel(
        max_range=8.0,
        fov_deg=176.0,
        min_range=0.1,
        mount="bottom",
        noise_std=0.03,
        min_subtended_deg=1.5,
    )


@dataclass
class SensorConfig:
    ins_rate: float = 100.0
    phone_gps_rate: float = 1.0
    phone_imu_rate: float = 25.0
    gimbal_cam_rate: float = 30.0
    bottom_cam_rate: float = 20.0
    ins_latency: float = 0.0
    phone_gps_latency: float = 0.3
    phone_imu_latency: float = 0.0
    gimbal_cam_latency: float = 0.033
    bottom_cam_latency: float = 0.033
    phone_gps_dropout: float = 0.0
    phone_imu_dropout: float = 0.0
    gimbal_cam_dropout: float = 0.0
    bottom_cam_dropout: float = 0.0
    ins_pos_std: float = 0.05
    ins_vel_std: float = 0.1
    ins_acc_std: float = 0.1
    gps_horizontal_std: float = 1.5
    gps_vertical_std: float = 3.0
    gps_speed_std: float = 0.3
    gps_heading_std_deg: float = 5.0
    # accuracy the phone reports alongside each fix; independent of the
    # true noise so a noise-free device still reports realistic figures
    gps_reported_horizontal_std: float = 1.5
    gps_reported_vertical_std: float = 3.0
    gps_reported_speed_std: float = 0.3
    gps_reported_heading_std_deg: float = 5.0
    phone_imu_std: float = 0.6
    flow_beta: float = 0.8
    over_pad_radius: float = 1.5  # [m] horizontal
    over_pad_max_height: float = 6.0  # [m]
    camera_blackouts: list = field(default_factory=list)  # [[t0, t1], ...]
    gimbal_camera: CameraModel = field(default_factory=default_gimbal_camera)
    bottom_camera: CameraModel = field(default_factory=default_bottom_camera)

    def __post_init__(self):
        for name in ("ins", "phone_gps", "phone_imu", "gimbal_cam", "bottom_cam"):
            if not getattr(self, f"{name}_rate") > 0:
                raise ValueError(f"{name}_rate must be positive")
            if getattr(self, f"{name}_latency") < 0:
                raise ValueError(f"{name}_latency must be non-negative")
            drop = getattr(self, f"{name}_dropout", 0.0)
            if not 0.0 <= drop <= 1.0:
                raise ValueError(f"{name}_dropout must be in [0, 1]")
        stds = [v for k, v in vars(self).items() if k.endswith("_std") or k.endswith("_std_deg")]
        if any(v < 0 for v in stds):
            raise ValueError("noise standard deviations must be non-negative")
        for w in self.camera_blackouts:
            if len(w) != 2 or w[1] < w[0]:
                raise ValueError(f"bad camera blackout window {w}")

    def in_blackout(self, t: float) -> bool:
        return any(t0 <= t <= t1 for t0, t1 in self.camera_blackouts)


# -- single-shot samplers ------------------------------------------------------


def sample_ins(
    mav_p, mav_v, mav_a, v_gv, over_pad: bool, rng, cfg: SensorConfig, declared_std=(0.05, 0.1, 0.1)
) -> Measurement:
    """INS reading with the declared (approach-phase) noise.

    Over the pad the velocity channel drifts toward the MAV velocity relative
    to the pad, weighted by ``flow_beta``; the declared noise does not say so.
    ``declared_std`` holds the position, velocity and acceleration stds put
    in R, which need not match the true noise in ``cfg``.
    """
    v = np.asarray(mav_v, dtype=float)
    if over_pad:
        v = v - cfg.flow_beta * np.asarray(v_gv, dtype=float)
    noise = rng.standard_normal(9)
    p = np.asarray(mav_p, dtype=float) + cfg.ins_pos_std * noise[0:3]
    v = v + cfg.ins_vel_std * noise[3:6]
    a = np.asarray(mav_a, dtype=float) + cfg.ins_acc_std * noise[6:9]
    return ins_measurement(
        p,
        v,
        a,
        MissionPhase.APPROACH,
        pos_std=declared_std[0],
        vel_std_approach=declared_std[1],
        acc_std=declared_std[2],
    )


def gps_device_covariance(psi: float, speed: float, cfg: SensorConfig) -> np.ndarray:
    """5x5 covariance the simulated phone reports for (x, y, z, vx, vy).

    A small floor keeps it positive definite even for a noise-free device.
    """
    R = 1e-6 * np.eye(5)
    R[0, 0] += cfg.gps_reported_horizontal_std**2
    R[1, 1] += cfg.gps_reported_horizontal_std**2
    R[2, 2] += cfg.gps_reported_vertical_std**2
    c, s = math.cos(psi), math.sin(psi)
    J = np.array([[c, -speed * s], [s, speed * c]])
    heading_var = math.radians(cfg.gps_reported_heading_std_deg) ** 2
    Cv = J @ np.diag([cfg.gps_reported_speed_std**2, heading_var]) @ J.T
    R[3:5, 3:5] += Cv
    return R


def sample_phone_gps(gv, origin: GeodeticPoint, rng, cfg: SensorConfig, min_speed: float = 2.5):
    """Phone GPS fix, or None on dropout."""
    draws = rng.standard_normal(5)
    if rng.random() < cfg.phone_gps_dropout:
        return None
    noise = np.array(
        [cfg.gps_horizontal_std * draws[0], cfg.gps_horizontal_std * draws[1], cfg.gps_vertical_std * draws[2]]
    )
    geo = ned_to_geodetic(gv.p + noise, origin)
    speed = max(0.0, gv.speed + cfg.gps_speed_std * draws[3])
    psi = gv.heading + math.radians(cfg.gps_heading_std_deg) * draws[4]
    R = gps_device_covariance(psi, speed, cfg)
    return gv_gps_measurement(geo, origin, psi, speed, R, min_speed=min_speed)


def sample_phone_imu(gv, rng, cfg: SensorConfig, declared_std: float = 0.6):
    draws = rng.standard_normal(3)
    if rng.random() < cfg.phone_imu_dropout:
        return None
    return gv_imu_measurement(gv.a + cfg.phone_imu_std * draws, std=declared_std)


def sample_gimbal_camera(mav_p, gv_p, gimbal, model: CameraModel, rng, dropout=0.0, declared_std=0.2):
    """Gimbal camera detection, or None if the tag is not visible."""
    draws = rng.standard_normal(3)
    lost = rng.random() < dropout
    rel = np.asarray(mav_p, dtype=float) - np.asarray(gv_p, dtype=float)
    R_NG = gimbal_rotation(gimbal.pan, gimbal.tilt)
    if lost or not model.sees(rel, R_NG):
        return None
    p_rel_G = R_NG.T @ rel + model.noise_std * draws
    return gimbal_camera_measurement(p_rel_G, R_NG, std=declared_std)


def sample_bottom_camera(mav_p, attitude, gv_p, model: CameraModel, rng, dropout=0.0, declared_std=0.3):
    draws = rng.standard_normal(3)
    lost = rng.random() < dropout
    rel = np.asarray(mav_p, dtype=float) - np.asarray(gv_p, dtype=float)
    R_NC = bottom_camera_rotation(*attitude)
    if lost or not model.sees(rel, R_NC):
        return None
    p_rel_C = R_NC.T @ rel + model.noise_std * draws
    return bottom_camera_measurement(p_rel_C, R_NC, std=declared_std)


# -- scheduled suite -------------------------------------------------------------

SENSOR_ORDER = ("ins", "phone_gps", "phone_imu", "gimbal_cam", "bottom_cam")


@dataclass
class _Channel:
    rate: float
    latency: float
    next_k: int = 0
    pending: deque = field(default_factory=deque)


@dataclass
class TruthSnapshot:
    """What the sensors may look at on one tick."""

    mav_p: np.ndarray
    mav_v: np.ndarray
    mav_a: np.ndarray
    attitude: tuple
    gv: object
    gimbal: object
    over_pad: bool


class SensorSuite:
    """Rate-gated sensor polling on a fixed tick.

    Sample ``k`` of a sensor with rate ``r`` is taken on the first tick at or
    after ``k / r`` and delivered on the first tick at or after
    ``k / r + latency``; its timestamp is exactly ``k / r + latency``.
    """

    def __init__(self, cfg: SensorConfig, origin: GeodeticPoint, seed: int, tick_rate: float,
                 filter_cfg=None):
        self.cfg = cfg
        self.origin = origin
        self.tick_rate = tick_rate
        self.filter_cfg = filter_cfg
        streams = np.random.SeedSequence(seed).spawn(len(SENSOR_ORDER))
        self.rngs = {name: np.random.default_rng(s) for name, s in zip(SENSOR_ORDER, streams)}
        self.channels = {
            name: _Channel(getattr(cfg, f"{name}_rate"), getattr(cfg, f"{name}_latency"))
            for name in SENSOR_ORDER
        }
        # camera -> detected on the latest sample (None before the first one)
        self.visible = {"gimbal_cam": None, "bottom_cam": None}
        self.last_detection_time = {"gimbal_cam": -math.inf, "bottom_cam": -math.inf}

    def _tick_of(self, t: float) -> int:
        return math.ceil(t * self.tick_rate - 1e-6)

    def _declared(self, name, default):
        return getattr(self.filter_cfg, name, default) if self.filter_cfg is not None else default

    def _sample(self, name: str, t: float, truth: TruthSnapshot):
        cfg, rng = self.cfg, self.rngs[name]
        if name == "ins":
            declared = (
                self._declared("ins_pos_std", 0.05),
                self._declared("ins_vel_std_approach", 0.1),
                self._declared("ins_acc_std", 0.1),
            )
            return sample_ins(
                truth.mav_p, truth.mav_v, truth.mav_a, truth.gv.v, truth.over_pad, rng, cfg, declared
            )
        if name == "phone_gps":
            return sample_phone_gps(
                truth.gv, self.origin, rng, cfg, self._declared("gps_heading_min_speed", 2.5)
            )
        if name == "phone_imu":
            return sample_phone_imu(truth.gv, rng, cfg, self._declared("gv_imu_std", 0.6))
        blackout = cfg.in_blackout(t)
        if name == "gimbal_cam":
            z = sample_gimbal_camera(
                truth.mav_p, truth.gv.p, truth.gimbal, cfg.gimbal_camera, rng,
                1.0 if blackout else cfg.gimbal_cam_dropout,
                self._declared("gimbal_camera_std", 0.2),
            )
        else:
            z = sample_bottom_camera(
                truth.mav_p, truth.attitude, truth.gv.p, cfg.bottom_camera, rng,
                1.0 if blackout else cfg.bottom_cam_dropout,
                self._declared("bottom_camera_std", 0.3),
            )
        self.visible[name] = z is not None
        if z is not None:
            self.last_detection_time[name] = t
        return z

    def poll(self, tick: int, truth: TruthSnapshot) -> list:
        """Sample due sensors and return measurements due for delivery."""
        out = []
        for name in SENSOR_ORDER:
            ch = self.channels[name]
            while self._tick_of(ch.next_k / ch.rate) <= tick:
                k = ch.next_k
                ch.next_k += 1
                t_sample = k / ch.rate
                z = self._sample(name, t_sample, truth)
                if z is not None:
                    stamp = t_sample + ch.latency
                    ch.pending.append((self._tick_of(stamp), stamp, z))
            while ch.pending and ch.pending[0][0] <= tick:
                _, stamp, z = ch.pending.popleft()
                out.append((name, z.restamped(stamp)))
        return out

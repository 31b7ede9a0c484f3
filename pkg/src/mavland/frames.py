"""Local NED frame helpers: rotations and flat-Earth geodetic conversion.

Conventions
-----------
* NED navigation frame, z positive down.
* Euler angles follow the ZYX sequence (yaw psi, then pitch theta, then
  roll phi); ``rotation_from_euler`` maps body vectors into NED.
* The bottom camera frame is the body frame rotated by +90 deg about the
  body z axis (right-hand rule).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EARTH_RADIUS = 6378137.0  # [m]


@dataclass(frozen=True)
class GeodeticPoint:
    """Latitude/longitude in radians, altitude in meters (positive up)."""

    latitude: float
    longitude: float
    altitude: float

    def __post_init__(self):
        vals = (self.latitude, self.longitude, self.altitude)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite geodetic point {vals}")
        if abs(self.latitude) > math.pi / 2:
            raise ValueError(f"latitude {self.latitude} outside [-pi/2, pi/2]")
        if abs(self.longitude) > math.pi:
            raise ValueError(f"longitude {self.longitude} outside [-pi, pi]")


def geodetic_to_ned(p: GeodeticPoint, origin: GeodeticPoint) -> np.ndarray:
    """Convert a geodetic point to a NED offset from ``origin``.

    Small-offset spherical approximation. The east component scales with the
    cosine of the point's own latitude, not the origin's.
    """
    x = (p.latitude - origin.latitude) * EARTH_RADIUS
    y = (p.longitude - origin.longitude) * math.cos(p.latitude) * EARTH_RADIUS
    z = origin.altitude - p.altitude
    return np.array([x, y, z])


def ned_to_geodetic(ned, origin: GeodeticPoint) -> GeodeticPoint:
    """Exact inverse of :func:`geodetic_to_ned`."""
    x, y, z = (float(c) for c in ned)
    la = origin.latitude + x / EARTH_RADIUS
    lo = origin.longitude + y / (math.cos(la) * EARTH_RADIUS)
    return GeodeticPoint(la, lo, origin.altitude - z)


def heading_speed_to_velocity(psi_a: float, U_a: float) -> tuple[float, float]:
    """Planar NED velocity from a course angle and ground speed."""
    if U_a < 0:
        raise ValueError("speed must be non-negative")
    return U_a * math.cos(psi_a), U_a * math.sin(psi_a)


def rotation_from_euler(phi: float, theta: float, psi: float) -> np.ndarray:
    """Body-to-NED rotation matrix for ZYX Euler angles."""
    cf, sf = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(psi), math.sin(psi)
    return np.array(
        [
            [ct * cp, sf * st * cp - cf * sp, cf * st * cp + sf * sp],
            [ct * sp, sf * st * sp + cf * cp, cf * st * sp - sf * cp],
            [-st, sf * ct, cf * ct],
        ]
    )


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


# columns are the camera axes expressed in the body frame
BODY_TO_BOTTOM_CAMERA = rot_z(math.pi / 2)


def bottom_camera_rotation(phi: float, theta: float, psi: float) -> np.ndarray:
    """Rotation taking bottom-camera-frame vectors into NED."""
    return rotation_from_euler(phi, theta, psi) @ BODY_TO_BOTTOM_CAMERA


def gimbal_rotation(pan: float, tilt: float) -> np.ndarray:
    """Rotation taking gimbal-camera-frame vectors into NED.

    The camera z axis (optical axis) points along azimuth ``pan`` and
    elevation ``tilt`` (negative tilt looks down); x points to the right of
    the image and y completes the right-handed triad.
    """
    cp, sp = math.cos(pan), math.sin(pan)
    ct, st = math.cos(tilt), math.sin(tilt)
    # columns x, y = z cross x, z (optical axis)
    return np.array(
        [
            [-sp, st * cp, ct * cp],
            [cp, st * sp, ct * sp],
            [0.0, ct, -st],
        ]
    )


def boresight_angles(direction) -> tuple[float, float]:
    """Pan/tilt that align the gimbal optical axis with ``direction``."""
    dx, dy, dz = (float(c) for c in direction)
    pan = math.atan2(dy, dx)
    tilt = math.atan2(-dz, math.hypot(dx, dy))
    return pan, tilt


def wrap_angle(a: float) -> float:
    """Wrap to [-pi, pi)."""
    return (a + math.pi) % (2.0 * math.pi) - math.pi

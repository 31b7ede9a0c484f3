"""
Frames: GPS fixes to NED and pointing the gimbal
================================================

The phone on the car reports latitude, longitude and altitude; the filter
works in a local North-East-Down frame anchored at a fixed origin. Over a
few kilometres the flat-Earth conversion is accurate to centimetres.

The gimbal camera is pointed with a pan/tilt pair computed from the
estimated line of sight, and a detection seen in the camera frame is rotated
back into NED with the same angles.

Run with::

    python3 demos/frames_and_gimbal.py
"""

import math

import numpy as np

from mavland.frames import (
    GeodeticPoint,
    boresight_angles,
    geodetic_to_ned,
    gimbal_rotation,
    ned_to_geodetic,
)

origin = GeodeticPoint(math.radians(45.5048), math.radians(-73.6132), 50.0)
print("offset north [m]   round-trip error [m]")
for north in (1.0, 100.0, 1000.0, 5000.0):
    p = ned_to_geodetic(np.array([north, 0.3 * north, -12.0]), origin)
    back = geodetic_to_ned(p, origin)
    print(f"{north:16.1f}   {np.linalg.norm(back - [north, 0.3 * north, -12.0]):20.2e}")

# MAV 20 m behind and 6 m above the pad
los = np.array([20.0, -3.0, 6.0])  # pad minus MAV, NED
pan, tilt = boresight_angles(los)
R = gimbal_rotation(pan, tilt)
in_camera = R.T @ los
print(f"\npan {math.degrees(pan):.2f} deg, tilt {math.degrees(tilt):.2f} deg")
print("pad in camera frame:", np.round(in_camera, 9), "(all range on the optical axis)")
print("rotated back to NED:", np.round(R @ in_camera, 9))

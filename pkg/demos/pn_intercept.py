"""
Proportional navigation intercept
=================================

A point-mass pursuer starts 30 m behind a target that drives away at a
constant 14 m/s. The approach law adds a PD closing term along the line of
sight to the PN term normal to it, so the pursuer both catches up and
rotates the line of sight to a standstill.

Run with::

    python3 demos/pn_intercept.py

The table shows range, closing speed and the magnitude of the line-of-sight
rate every two seconds. The range first grows while the pursuer accelerates
from rest, then shrinks steadily as the LOS rate decays toward zero: the
pursuer settles onto a collision course.
"""

import numpy as np

from mavland.guidance import GuidanceGains, approach_acceleration, los_rate

gains = GuidanceGains()
dt = 0.01

p = np.array([-30.0, 4.0, 0.0])  # pursuer, slightly off the road axis
v = np.zeros(3)
pt = np.zeros(3)
vt = np.array([14.0, 0.0, 0.0])

print(f"{'t [s]':>6} {'range [m]':>10} {'closing [m/s]':>14} {'|LOS rate| [rad/s]':>19}")
for k in range(int(30 / dt) + 1):
    u, ud = pt - p, vt - v
    r = np.linalg.norm(u)
    if k % 200 == 0 or r < gains.switch_in:
        omega = np.linalg.norm(los_rate(u, ud))
        print(f"{k * dt:6.1f} {r:10.3f} {-(u @ ud) / r:14.3f} {omega:19.5f}")
    if r < gains.switch_in:
        print(f"\nwithin {gains.switch_in} m after {k * dt:.2f} s; the landing controller takes over here")
        break
    a = approach_acceleration(u, ud, gains)
    p = p + v * dt + 0.5 * a * dt**2
    v = v + a * dt
    pt = pt + vt * dt

"""
Identifying the drag coefficient
================================

In steady level flight at pitch theta the horizontal thrust component
balances drag, ``m g tan(theta) = kd v^2``. Flying a few constant pitch
angles and logging the terminal speeds gives a one-parameter least-squares
problem for ``kd``.

Run with::

    python3 demos/drag_fit.py

Terminal speeds are generated from the simulator's own plant (flown until
the speed settles), perturbed with 0.1 m/s noise and then fitted. The same
fit is available as ``mavland fit-drag samples.csv``.
"""

import math
from types import SimpleNamespace

import numpy as np

from mavland.vehicles import MavParams, MavTruth, fit_drag_coefficient, mav_step

params = MavParams(kd=0.12)
rng = np.random.default_rng(2)
samples = []
print(" pitch [deg]   terminal speed [m/s]")
for deg in (5, 10, 15, 20, 25):
    theta = -math.radians(deg)  # nose down flies north
    cmd = SimpleNamespace(theta=theta, phi=0.0, psi=0.0, thrust=params.mass * params.g / math.cos(theta),
                          altitude_hold=True, z_ref=-10.0, vz_cmd=0.0)
    s = MavTruth(np.array([0.0, 0.0, -10.0]), np.zeros(3), attitude=(0.0, theta, 0.0), params=params)
    for _ in range(6000):
        s = mav_step(s, cmd, 0.01)
    v = s.v[0] + 0.1 * rng.standard_normal()
    samples.append((math.radians(deg), v))
    print(f" {deg:11d}   {v:20.3f}")

kd, rms = fit_drag_coefficient(samples, params.mass, params.g)
print(f"\nfitted kd = {kd:.4f} (plant {params.kd}), residual RMS {rms:.3f} N")

"""
Landing on a car at 14 m/s
==========================

Closed-loop run of the full stack: a car accelerates to 14 m/s (about
50 km/h) on a 2 % climb while the MAV, starting 30 m behind at 10 m, closes
in with PN guidance, switches to PID tracking over the roof, and descends
once its estimated position and velocity relative to the pad have settled.

Run with::

    python3 demos/landing_14ms.py [seed]

The script prints the event log, the velocity match at the start of the
descent and the touchdown metrics. The same run from the command line is
``mavland run --scenario scenarios/nominal_14ms.json``.
"""

import sys

import numpy as np

from mavland.config import nominal_scenario
from mavland.sim import run_scenario

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
log = run_scenario(nominal_scenario(seed=seed))

print("events")
for ev in log.events:
    print(f"  {ev.t:7.2f} s  {ev.kind:12s} {ev.detail}")

# estimated vs true relative position at a few instants
print("\n  t [s]   true lateral [m]   est. lateral [m]   sd(x rel) [m]")
for t in (5.0, 10.0, 15.0, 20.0):
    i = int(round(t * 100))
    if i >= len(log.t):
        break
    rel = log.mav_p[i, :2] - log.gv_p[i, :2]
    est = log.est_mean[i, 0:2] - log.est_mean[i, 9:11]
    sd = np.sqrt(log.est_var[i, 0] + log.est_var[i, 9])
    print(f"  {t:5.1f}   {np.hypot(*rel):16.3f}   {np.hypot(*est):16.3f}   {sd:13.3f}")

if log.descent_start:
    ds = log.descent_start
    print(f"\ndescent began at {ds['t']:.2f} s, horizontal speed error "
          f"{ds['horizontal_speed_error']:.3f} m/s, lateral offset {ds['lateral_error']:.3f} m")

o = log.outcome
print(f"\noutcome {o.kind.value}: lateral {o.lateral_error:.3f} m, relative speed "
      f"{o.relative_speed:.3f} m/s, sink rate {o.descent_speed:.3f} m/s at {o.time_to_land:.2f} s")
print("update counts:", log.update_counts)

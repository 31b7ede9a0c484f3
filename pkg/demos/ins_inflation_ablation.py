"""
Why the INS velocity is distrusted over the pad
===============================================

Once the MAV is over the car roof, the autopilot's optical-flow velocity
sees the roof instead of the road and reports velocity relative to the car.
The filter guards against this by inflating the INS velocity variance by
10^4 in the Landing and Descent phases. Switching that off lets the
corrupted velocity drag the MAV's estimate, and the landings fall apart.

Run with::

    python3 demos/ins_inflation_ablation.py [runs]

Each configuration is run over the same seeds. Set ``SIM_THREADS`` to use
several cores.
"""

import dataclasses
import sys

from mavland.config import nominal_scenario
from mavland.sim import run_monte_carlo

runs = int(sys.argv[1]) if len(sys.argv) > 1 else 10
base = nominal_scenario()

for inflate in (True, False):
    sc = dataclasses.replace(base, filter=dataclasses.replace(base.filter, inflate_ins_velocity=inflate))
    s = run_monte_carlo(sc, runs, 1000)
    d = s.as_dict()
    print(f"inflation {'on ' if inflate else 'off'}: success {s.success_rate:5.0%}  outcomes {d['outcomes']}")
    if s.success_rate > 0:
        print(f"    lateral p95 {s.lateral_error_p95:.3f} m, worst touchdown speed {s.relative_speed_max:.3f} m/s")

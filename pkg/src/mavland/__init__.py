"""Simulation of a multirotor landing on a moving ground vehicle.

Kalman filter for MAV/pad kinematics, PN/PID guidance with phase switching,
vehicle and sensor models, and a fixed-step closed-loop simulator.
"""

from mavland.config import Scenario, load_scenario
from mavland.estimator import FilterState, KalmanFilter, Measurement, ProcessModel
from mavland.guidance import GuidanceCommand, GuidanceGains, MissionPhase
from mavland.sim import Outcome, SimLog, classify_outcome, run_monte_carlo, run_scenario

__all__ = [
    "FilterState",
    "GuidanceCommand",
    "GuidanceGains",
    "KalmanFilter",
    "Measurement",
    "MissionPhase",
    "Outcome",
    "ProcessModel",
    "Scenario",
    "SimLog",
    "classify_outcome",
    "load_scenario",
    "run_monte_carlo",
    "run_scenario",
]

__version__ = "0.1.0"

"""Fixed-step closed-loop simulation and Monte Carlo driver.

One global tick (100 Hz by default) drives everything: sensors fire on their
own phase-aligned sub-ticks, the filter predicts every tick and fuses what
arrived, guidance reads only the filter estimate, and the plant integrates
one step.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from mavland.config import Scenario
from mavland.estimator import (
    N_STATES,
    KalmanFilter,
    SensorKind,
    ins_measurement,
    initial_state,
    make_process_model,
)
from mavland.guidance import GimbalAngles, Guidance, GuidanceCommand, point_gimbal
from mavland.phases import MissionPhase
from mavland.sensors import SensorSuite, TruthSnapshot
from mavland.vehicles import MavTruth, gv_state, mav_step


class OutcomeKind(str, Enum):
    LANDED = "Landed"
    TIMEOUT = "Timeout"
    LOST_TARGET = "LostTarget"
    CRASH = "Crash"


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    lateral_error: float = math.nan  # [m] at disarm/contact
    relative_speed: float = math.nan  # [m/s] |v_m - v_a| at disarm/contact
    descent_speed: float = math.nan  # [m/s] relative sink rate at disarm/contact
    time_to_land: float = math.nan  # [s]

    @property
    def landed(self) -> bool:
        return self.kind is OutcomeKind.LANDED


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    detail: str = ""


@dataclass
class SimLog:
    """Per-tick record plus events; arrays are stacked once the run ends."""

    t: np.ndarray
    mav_p: np.ndarray
    mav_v: np.ndarray
    mav_att: np.ndarray
    gv_p: np.ndarray
    gv_v: np.ndarray
    est_mean: np.ndarray
    est_var: np.ndarray
    phase: list
    theta_cmd: np.ndarray
    phi_cmd: np.ndarray
    events: list
    contact: dict | None = None  # truth at disarm or at uncommanded contact
    descent_start: dict | None = None
    last_detection: float = -math.inf
    update_counts: dict = field(default_factory=dict)
    dropped: int = 0
    seed: int = 0
    outcome: Outcome | None = None


def _contact_record(t, mav: MavTruth, gv, disarmed: bool) -> dict:
    rel_p = mav.p - gv.p
    rel_v = mav.v - gv.v
    return {
        "t": t,
        "lateral_error": float(math.hypot(rel_p[0], rel_p[1])),
        "relative_speed": float(np.linalg.norm(rel_v)),
        "descent_speed": float(rel_v[2]),
        "height": float(gv.p[2] - mav.p[2]),
        "disarmed": disarmed,
    }


def _hover(psi: float, z_ref: float, sc: Scenario) -> GuidanceCommand:
    mg = sc.mav.mass * sc.mav.g
    return GuidanceCommand(0.0, 0.0, psi, mg, 0.0, True, z_ref, MissionPhase.APPROACH)


def run_scenario(sc: Scenario) -> SimLog:
    ts = sc.ts
    n_ticks = int(round(sc.duration * sc.tick_rate))
    fcfg = sc.filter
    kf = KalmanFilter(make_process_model(ts, fcfg.q_wm, fcfg.q_wa))
    sensors = SensorSuite(sc.sensors, sc.origin, sc.seed, sc.tick_rate, fcfg)
    guidance = Guidance(
        sc.guidance, sc.mav.mass, sc.mav.kd, sc.mav.g, sc.cruise_altitude,
        psi=math.radians(sc.mav_initial_yaw_deg),
    )
    gimbal_rate = math.radians(sc.guidance.gimbal_rate_deg)
    mav = MavTruth(
        p=np.array(sc.mav_initial_position),
        v=np.array(sc.mav_initial_velocity),
        attitude=(0.0, 0.0, math.radians(sc.mav_initial_yaw_deg)),
        params=sc.mav,
    )
    mav_a = np.zeros(3)
    gimbal = GimbalAngles(0.0, math.radians(-45.0))
    scfg = sc.sensors

    rows_t, rows_mp, rows_mv, rows_att, rows_gp, rows_gv = [], [], [], [], [], []
    rows_mean, rows_var, rows_phase, rows_th, rows_ph = [], [], [], [], []
    events: list[Event] = []
    nan_vec = np.full(N_STATES, np.nan)
    last_ins = None
    first_gps = None
    contact = None
    descent_start = None
    visible = dict(sensors.visible)
    cmd = None
    gv_next = gv_state(sc.gv_profile, 0.0)

    for i in range(n_ticks + 1):
        t = i * ts
        gv = gv_next
        rel = mav.p - gv.p
        height = gv.p[2] - mav.p[2]
        over_pad = (
            math.hypot(rel[0], rel[1]) < scfg.over_pad_radius
            and 0.0 < height < scfg.over_pad_max_height
        )
        snap = TruthSnapshot(mav.p, mav.v, mav_a, mav.attitude, gv, gimbal, over_pad)
        arrived = sensors.poll(i, snap)

        for cam in ("gimbal_cam", "bottom_cam"):
            now = sensors.visible[cam]
            # visible[] starts as None, so an initial miss is not a loss
            if now is not None and now != visible[cam] and (now or visible[cam] is not None):
                events.append(Event(t, "detect" if now else "lost", cam))
            visible[cam] = now

        if not kf.initialized:
            for name, z in arrived:
                if name == "ins":
                    last_ins = z
                elif name == "phone_gps" and first_gps is None:
                    first_gps = z
            if last_ins is not None and first_gps is not None:
                v_a = np.zeros(3)
                if first_gps.kind is SensorKind.GV_GPS_WITH_HEADING:
                    v_a[:2] = first_gps.z[3:5]
                kf.initialize(
                    initial_state(
                        last_ins.z[0:3], last_ins.z[3:6], first_gps.z[0:3], v_a,
                        timestamp=t, pos_var=fcfg.init_pos_var,
                        vel_var=fcfg.init_vel_var, acc_var=fcfg.init_acc_var,
                    )
                )
                events.append(Event(t, "filter_init"))
        else:
            kf.predict()
            for name, z in arrived:
                if name == "ins":
                    z = ins_measurement(
                        z.z[0:3], z.z[3:6], z.z[6:9], guidance.phase,
                        pos_std=fcfg.ins_pos_std,
                        vel_std_approach=fcfg.ins_vel_std_approach,
                        vel_std_landing=fcfg.ins_vel_std_landing,
                        acc_std=fcfg.ins_acc_std,
                        inflate=fcfg.inflate_ins_velocity,
                        timestamp=z.timestamp,
                    )
                kf.process(z)

        if kf.initialized:
            est = kf.state
            prev = guidance.phase
            phase = guidance.update_phase(est, ts)
            if phase is not prev:
                events.append(Event(t, "phase", f"{prev.value}->{phase.value}"))
                if phase is MissionPhase.DESCENT and descent_start is None:
                    rv = mav.v - gv.v
                    descent_start = {
                        "t": t,
                        "horizontal_speed_error": float(math.hypot(rv[0], rv[1])),
                        "lateral_error": float(math.hypot(rel[0], rel[1])),
                    }
            cmd = guidance.command(est, ts)
            gimbal = point_gimbal(gimbal, est.p_m - est.p_a, ts, gimbal_rate)
            mean, var = est.mean, np.diag(est.covariance)
        else:
            z_ref = last_ins.z[2] if last_ins is not None else mav.p[2]
            cmd = _hover(guidance.psi, z_ref, sc)
            mean, var = nan_vec, nan_vec

        rows_t.append(t)
        rows_mp.append(mav.p)
        rows_mv.append(mav.v)
        rows_att.append(mav.attitude)
        rows_gp.append(gv.p)
        rows_gv.append(gv.v)
        rows_mean.append(mean)
        rows_var.append(var)
        rows_phase.append(guidance.phase.value)
        rows_th.append(cmd.theta)
        rows_ph.append(cmd.phi)

        if guidance.phase is MissionPhase.DISARMED:
            contact = _contact_record(t, mav, gv, disarmed=True)
            events.append(Event(t, "disarm"))
            break
        if i == n_ticks:
            break

        v_prev = mav.v
        mav = mav_step(mav, cmd, ts)
        mav_a = (mav.v - v_prev) / ts
        gv_next = gv_state(sc.gv_profile, (i + 1) * ts)
        if mav.p[2] >= gv_next.p[2]:
            contact = _contact_record(t + ts, mav, gv_next, disarmed=False)
            events.append(Event(t + ts, "contact"))
            break

    log = SimLog(
        t=np.array(rows_t),
        mav_p=np.array(rows_mp),
        mav_v=np.array(rows_mv),
        mav_att=np.array(rows_att),
        gv_p=np.array(rows_gp),
        gv_v=np.array(rows_gv),
        est_mean=np.array(rows_mean),
        est_var=np.array(rows_var),
        phase=rows_phase,
        theta_cmd=np.array(rows_th),
        phi_cmd=np.array(rows_ph),
        events=events,
        contact=contact,
        descent_start=descent_start,
        last_detection=max(sensors.last_detection_time.values()),
        update_counts={k.value: v for k, v in kf.update_counts.items()},
        dropped=kf.dropped,
        seed=sc.seed,
    )
    log.outcome = classify_outcome(
        log, sc.pad_half_width, lost_target_timeout=sc.lost_target_timeout
    )
    return log


def classify_outcome(
    log: SimLog, pad_half_width: float = 0.5, max_descent_speed: float = 1.0,
    lost_target_timeout: float = 2.0,
) -> Outcome:
    c = log.contact
    if c is not None:
        ok = (
            c["disarmed"]
            and c["lateral_error"] <= pad_half_width
            and c["descent_speed"] <= max_descent_speed
        )
        return Outcome(
            OutcomeKind.LANDED if ok else OutcomeKind.CRASH,
            lateral_error=c["lateral_error"],
            relative_speed=c["relative_speed"],
            descent_speed=c["descent_speed"],
            time_to_land=c["t"],
        )
    t_end = float(log.t[-1]) if len(log.t) else 0.0
    final_phase = log.phase[-1] if log.phase else MissionPhase.APPROACH.value
    if final_phase in (MissionPhase.LANDING.value, MissionPhase.DESCENT.value):
        if t_end - log.last_detection > lost_target_timeout:
            return Outcome(OutcomeKind.LOST_TARGET)
    return Outcome(OutcomeKind.TIMEOUT)


# -- Monte Carlo ---------------------------------------------------------------


@dataclass(frozen=True)
class RunResult:
    index: int
    seed: int
    outcome: Outcome
    descent_speed_error: float  # truth |v_m - v_a| horizontal at descent start


@dataclass(frozen=True)
class MonteCarloSummary:
    n_runs: int
    base_seed: int
    success_rate: float
    lateral_error_p50: float
    lateral_error_p95: float
    relative_speed_max: float
    time_to_land_mean: float
    runs: tuple

    def as_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "base_seed": self.base_seed,
            "success_rate": self.success_rate,
            "lateral_error_p50": self.lateral_error_p50,
            "lateral_error_p95": self.lateral_error_p95,
            "relative_speed_max": self.relative_speed_max,
            "time_to_land_mean": self.time_to_land_mean,
            "outcomes": {k.value: sum(r.outcome.kind is k for r in self.runs) for k in OutcomeKind},
        }


def _one_run(args) -> RunResult:
    sc, index, seed = args
    log = run_scenario(sc.with_seed(seed))
    ds = log.descent_start["horizontal_speed_error"] if log.descent_start else math.nan
    return RunResult(index, seed, log.outcome, ds)


def _nan_stat(fn, values):
    arr = np.asarray([v for v in values if not math.isnan(v)], dtype=float)
    return float(fn(arr)) if arr.size else math.nan


def summarize(runs, base_seed: int) -> MonteCarloSummary:
    runs = tuple(sorted(runs, key=lambda r: r.index))
    landed = [r for r in runs if r.outcome.landed]
    lateral = [r.outcome.lateral_error for r in runs]
    return MonteCarloSummary(
        n_runs=len(runs),
        base_seed=base_seed,
        success_rate=len(landed) / len(runs),
        lateral_error_p50=_nan_stat(lambda a: np.percentile(a, 50), lateral),
        lateral_error_p95=_nan_stat(lambda a: np.percentile(a, 95), lateral),
        relative_speed_max=_nan_stat(np.max, [r.outcome.relative_speed for r in landed]),
        time_to_land_mean=_nan_stat(np.mean, [r.outcome.time_to_land for r in landed]),
        runs=runs,
    )


def default_workers() -> int:
    env = os.environ.get("SIM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_monte_carlo(sc: Scenario, n_runs: int, base_seed: int, workers: int | None = None) -> MonteCarloSummary:
    """Run ``n_runs`` seeds ``base_seed + i``; results ordered by index."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    jobs = [(sc, i, base_seed + i) for i in range(n_runs)]
    workers = min(default_workers() if workers is None else workers, n_runs)
    if workers <= 1:
        results = [_one_run(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_run, jobs))
    return summarize(results, base_seed)

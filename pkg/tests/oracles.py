"""Independent reference computations shared by the unit and acceptance tests."""

import math

import numpy as np
from scipy import stats

from mavland.estimator import (
    FilterState,
    SensorKind,
    Measurement,
    initial_state,
    make_process_model,
    predict,
    update,
)
from mavland.guidance import GuidanceGains, approach_acceleration, los_rate


def intercept(p0, v0, pt0, vt, gains=None, dt=0.01, T=40.0):
    """Noise-free approach law on a double integrator vs a constant-velocity
    target. Returns ranges, LOS-rate magnitudes and the time step."""
    gains = gains or GuidanceGains()
    p, v = np.array(p0, float), np.array(v0, float)
    pt, vt = np.array(pt0, float), np.array(vt, float)
    n = int(round(T / dt))
    ranges, omegas = np.empty(n), np.empty(n)
    for k in range(n):
        u, ud = pt - p, vt - v
        ranges[k] = math.sqrt(u @ u)
        omegas[k] = np.linalg.norm(los_rate(u, ud)) if ranges[k] > 0 else 0.0
        a = approach_acceleration(u, ud, gains)
        # exact zero-order-hold step of the double integrator
        p = p + v * dt + 0.5 * a * dt * dt
        v = v + a * dt
        pt = pt + vt * dt
    return ranges, omegas


_H_REL = np.hstack((np.eye(3), np.zeros((3, 6)), -np.eye(3), np.zeros((3, 6))))


def _sel(cols):
    H = np.zeros((len(cols), 18))
    H[np.arange(len(cols)), cols] = 1.0
    return H


def linear_nees_runs(n_runs=100, n_ticks=300, Ts=0.01, q_wm=4.0, q_wa=2.0, seed=0):
    """NEES of the filter on data drawn from its own linear-Gaussian model.

    Truth follows x+ = F x + w with w ~ N(0, Q); the INS (100 Hz), pad GPS
    (1 Hz, 5 rows), relative camera (20 Hz) and pad IMU (25 Hz) measurements
    are drawn with exactly the declared noise. Returns an (n_runs, n_ticks)
    array of 18-dimensional NEES values after each tick's updates.
    """
    m = make_process_model(Ts, q_wm, q_wa)
    Lq = np.linalg.cholesky(m.Q + 1e-30 * np.eye(18))
    sensors = [
        (1, _sel(range(0, 9)), np.diag(np.repeat([0.05**2, 0.1**2, 0.1**2], 3)), SensorKind.INS_FULL),
        (100, _sel(range(9, 14)), np.diag([2.25, 2.25, 9.0, 0.09, 0.09]), SensorKind.GV_GPS_WITH_HEADING),
        (5, _H_REL, 0.2**2 * np.eye(3), SensorKind.GIMBAL_CAMERA),
        (4, _sel(range(15, 18)), 0.36 * np.eye(3), SensorKind.GV_PHONE_IMU),
    ]
    chol = {id(R): np.linalg.cholesky(R) for _, _, R, _ in sensors}
    rng = np.random.default_rng(seed)
    out = np.empty((n_runs, n_ticks))
    for r in range(n_runs):
        s = initial_state(np.zeros(3), np.zeros(3), np.zeros(3))
        x = rng.multivariate_normal(s.mean, s.covariance)
        for k in range(n_ticks):
            x = m.F @ x + Lq @ rng.standard_normal(18)
            s = predict(s, m)
            for every, H, R, kind in sensors:
                if (k + 1) % every == 0:
                    z = H @ x + chol[id(R)] @ rng.standard_normal(len(R))
                    s = update(s, Measurement(kind, z, H, R, s.timestamp))
            e = x - s.mean
            out[r, k] = e @ np.linalg.solve(s.covariance, e)
    return out


def chi2_band(dof, alpha=0.05):
    return stats.chi2.ppf(alpha / 2, dof), stats.chi2.ppf(1 - alpha / 2, dof)


def terminal_speed(theta, m, g, kd):
    return math.sqrt(m * g * math.tan(abs(theta)) / kd)

"""Command line front end: ``run``, ``mc`` and ``fit-drag``.

Exit codes: 0 on success (``run``: the vehicle landed), 2 when a run ends in
any other outcome, 1 on configuration or input errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from mavland.config import ConfigError, load_scenario, scenario_to_dict
from mavland.sim import OutcomeKind, SimLog, run_monte_carlo, run_scenario
from mavland.vehicles import GRAVITY, MavParams, fit_drag_coefficient

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_LANDED = 2

_AXES = ("x", "y", "z")
_STATE_NAMES = [f"{q}{ax}_{who}" for who in ("m", "a") for q in ("p", "v", "a") for ax in _AXES]

TRUTH_COLUMNS = [f"{q}{ax}_{who}" for who in ("m", "a") for q in ("p", "v") for ax in _AXES]
TRAJECTORY_COLUMNS = (
    ["t"]
    + TRUTH_COLUMNS
    + [f"est_{n}" for n in _STATE_NAMES]
    + [f"var_{n}" for n in _STATE_NAMES]
    + ["phase", "theta_cmd", "phi_cmd"]
)
MC_RUN_COLUMNS = ["index", "seed", "outcome", "lateral_error", "relative_speed", "descent_speed", "time_to_land"]


def _fmt(x) -> str:
    return "%.9g" % (x + 0.0)  # folds -0.0 into 0


def _json_num(x):
    # JSON has no NaN; absent metrics become null
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return _json_num(obj)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=False, allow_nan=False) + "\n")


def write_trajectory(log: SimLog, path: Path) -> None:
    """One row per tick, fixed 9-significant-digit formatting."""
    truth = np.hstack([log.mav_p, log.mav_v, log.gv_p, log.gv_v])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for i in range(len(log.t)):
            row = [_fmt(log.t[i])]
            row += [_fmt(v) for v in truth[i]]
            row += [_fmt(v) for v in log.est_mean[i]]
            row += [_fmt(v) for v in log.est_var[i]]
            row += [str(log.phase[i]), _fmt(log.theta_cmd[i]), _fmt(log.phi_cmd[i])]
            w.writerow(row)


def write_events(log: SimLog, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "kind", "detail"])
        for ev in log.events:
            w.writerow([_fmt(ev.t), ev.kind, ev.detail])


def outcome_dict(outcome) -> dict:
    return {
        "kind": outcome.kind.value,
        "lateral_error": outcome.lateral_error,
        "relative_speed": outcome.relative_speed,
        "descent_speed": outcome.descent_speed,
        "time_to_land": outcome.time_to_land,
    }


def cmd_run(scenario_path, seed=None, out_dir=".") -> int:
    sc = load_scenario(scenario_path)
    if seed is not None:
        sc = sc.with_seed(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log = run_scenario(sc)
    write_trajectory(log, out / "trajectory.csv")
    write_events(log, out / "events.csv")
    summary = {
        "seed": sc.seed,
        "outcome": log.outcome.kind.value,
        "metrics": outcome_dict(log.outcome),
        "descent_start": log.descent_start,
        "update_counts": dict(log.update_counts),
        "dropped_measurements": log.dropped,
        "config": scenario_to_dict(sc),
    }
    _write_json(out / "summary.json", summary)
    print(f"{log.outcome.kind.value}: lateral {log.outcome.lateral_error:.3f} m, "
          f"relative speed {log.outcome.relative_speed:.3f} m/s")
    return EXIT_OK if log.outcome.kind is OutcomeKind.LANDED else EXIT_NOT_LANDED


def cmd_mc(scenario_path, runs, base_seed=None, out_dir=".") -> int:
    if runs < 1:
        raise ConfigError("--runs must be >= 1")
    sc = load_scenario(scenario_path)
    base = sc.seed if base_seed is None else base_seed
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = run_monte_carlo(sc, runs, base)
    doc = summary.as_dict()
    doc["config"] = scenario_to_dict(sc)
    _write_json(out / "mc_summary.json", doc)
    with open(out / "mc_runs.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MC_RUN_COLUMNS)
        for r in summary.runs:
            o = r.outcome
            w.writerow([r.index, r.seed, o.kind.value, _fmt(o.lateral_error), _fmt(o.relative_speed),
                        _fmt(o.descent_speed), _fmt(o.time_to_land)])
    print(f"success rate {summary.success_rate:.3f} over {runs} runs")
    return EXIT_OK


def read_drag_samples(path) -> list:
    """Rows of (theta_deg, terminal_speed_mps); header and bad rows skipped."""
    samples = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if len(row) < 2:
                continue
            try:
                theta, v = float(row[0]), float(row[1])
            except ValueError:
                continue
            if math.isfinite(theta) and math.isfinite(v):
                samples.append((math.radians(theta), v))
    return samples


def cmd_fit_drag(data_path, mass=None, g=GRAVITY) -> int:
    mass = MavParams().mass if mass is None else mass
    try:
        samples = read_drag_samples(data_path)
    except OSError as exc:
        raise ConfigError(f"cannot read {data_path}: {exc.strerror}") from None
    if len(samples) < 2:
        raise ConfigError(f"{data_path}: need at least 2 valid (theta_deg, terminal_speed_mps) rows")
    try:
        kd, rms = fit_drag_coefficient(samples, mass, g)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(f"kd {kd:.6f}")
    print(f"residual_rms {rms:.6f}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors, not a "did not land" result
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mavland", description="MAV landing on a moving vehicle: simulation tools")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario")
    r.add_argument("--scenario", required=True, help="scenario JSON file")
    r.add_argument("--seed", type=int, help="override the file's seed")
    r.add_argument("--out", default=".", help="output directory")

    m = sub.add_parser("mc", help="Monte Carlo over consecutive seeds")
    m.add_argument("--scenario", required=True)
    m.add_argument("--runs", type=int, required=True)
    m.add_argument("--seed", type=int, help="base seed (default: the file's seed)")
    m.add_argument("--out", default=".")

    f = sub.add_parser("fit-drag", help="least-squares drag coefficient from steady-state samples")
    f.add_argument("data", help="CSV of theta_deg, terminal_speed_mps")
    f.add_argument("--mass", type=float, help="vehicle mass, kg")
    f.add_argument("--g", type=float, default=GRAVITY)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.scenario, args.seed, args.out)
        if args.command == "mc":
            return cmd_mc(args.scenario, args.runs, args.seed, args.out)
        return cmd_fit_drag(args.data, args.mass, args.g)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Scenario configuration and its JSON file format.

A scenario file is a JSON object with the sections ``scenario``, ``filter``,
``guidance``, ``mav``, ``gv_profile`` and ``sensors``. Every section is
optional and falls back to defaults; unknown keys are errors. Units are SI;
keys ending in ``_deg`` are degrees.
"""

from __future__ import annotations

import dataclasses
import json
import math
import re
import typing
from dataclasses import dataclass, field
from pathlib import Path

from mavland.frames import GeodeticPoint
from mavland.guidance import GuidanceGains
from mavland.sensors import SensorConfig
from mavland.vehicles import GvProfile, MavParams, Segment


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass
class FilterConfig:
    q_wm: float = 4.0  # [(m/s^3)^2 s]
    q_wa: float = 2.0
    ins_pos_std: float = 0.05
    ins_vel_std_approach: float = 0.1
    ins_vel_std_landing: float = 10.0
    ins_acc_std: float = 0.1
    inflate_ins_velocity: bool = True
    gimbal_camera_std: float = 0.2
    bottom_camera_std: float = 0.3
    gv_imu_std: float = 0.6
    gps_heading_min_speed: float = 2.5
    init_pos_var: float = 1.0
    init_vel_var: float = 1.0
    init_acc_var: float = 1.0

    def __post_init__(self):
        if self.q_wm < 0 or self.q_wa < 0:
            raise ValueError("filter PSDs must be non-negative")


@dataclass
class Scenario:
    duration: float = 60.0
    seed: int = 0
    tick_rate: float = 100.0
    mav_initial_position: tuple = (-30.0, 0.0, -10.0)
    mav_initial_velocity: tuple = (0.0, 0.0, 0.0)
    mav_initial_yaw_deg: float = 0.0
    cruise_altitude: float = 4.0  # [m] above the estimated pad
    pad_half_width: float = 0.5
    lost_target_timeout: float = 2.0
    origin_lat_deg: float = 45.5048
    origin_lon_deg: float = -73.6132
    origin_alt: float = 50.0
    filter: FilterConfig = field(default_factory=FilterConfig)
    guidance: GuidanceGains = field(default_factory=GuidanceGains)
    mav: MavParams = field(default_factory=MavParams)
    gv_profile: GvProfile = field(default_factory=GvProfile)
    sensors: SensorConfig = field(default_factory=SensorConfig)

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not self.tick_rate > 0:
            raise ValueError("tick_rate must be positive")
        if not self.cruise_altitude > self.guidance.disarm_height:
            raise ValueError("cruise_altitude must exceed the disarm height")
        self.mav_initial_position = tuple(float(c) for c in self.mav_initial_position)
        self.mav_initial_velocity = tuple(float(c) for c in self.mav_initial_velocity)
        if len(self.mav_initial_position) != 3 or len(self.mav_initial_velocity) != 3:
            raise ValueError("initial position/velocity need 3 components")

    @property
    def ts(self) -> float:
        return 1.0 / self.tick_rate

    @property
    def origin(self) -> GeodeticPoint:
        return GeodeticPoint(
            math.radians(self.origin_lat_deg), math.radians(self.origin_lon_deg), self.origin_alt
        )

    def with_seed(self, seed: int) -> Scenario:
        return dataclasses.replace(self, seed=int(seed))


_SECTIONS = {
    "filter": FilterConfig,
    "guidance": GuidanceGains,
    "mav": MavParams,
    "sensors": SensorConfig,
}


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    pat = re.compile(r'"' + re.escape(key) + r'"\s*:')
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.search(line):
            return i
    return None


def _coerce(tp, value, where, text):
    origin = typing.get_origin(tp)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}", _line_of(text, where.split(".")[-1]))
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}", _line_of(text, where.split(".")[-1]))
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}", _line_of(text, where.split(".")[-1]))
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string", _line_of(text, where.split(".")[-1]))
        return value
    if tp in (tuple, list) or origin in (tuple, list):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list", _line_of(text, where.split(".")[-1]))
        return value
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, where, text)
    return value


def _build(cls, data, where, text):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object", _line_of(text, where.split(".")[-1]))
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if f.init and not f.name.startswith("_")}
    kwargs = {}
    for key, value in data.items():
        if key not in names:
            raise ConfigError(f"unknown key {where}.{key}", _line_of(text, key))
        kwargs[key] = _coerce(hints[key], value, f"{where}.{key}", text)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}", _line_of(text, where.split(".")[-1])) from None


_PROFILE_KEYS = {"start_position", "start_heading_deg", "start_speed", "start_grade_pct", "segments"}
_SEGMENT_KEYS = {"type", "duration", "target_speed", "grade_pct", "turn_deg"}


def _build_profile(data, text) -> GvProfile:
    if not isinstance(data, dict):
        raise ConfigError("gv_profile: expected an object", _line_of(text, "gv_profile"))
    for key in data:
        if key not in _PROFILE_KEYS:
            raise ConfigError(f"unknown key gv_profile.{key}", _line_of(text, key))
    segments = []
    for i, seg in enumerate(data.get("segments", [])):
        if not isinstance(seg, dict):
            raise ConfigError(f"gv_profile.segments[{i}]: expected an object", _line_of(text, "segments"))
        for key in seg:
            if key not in _SEGMENT_KEYS:
                raise ConfigError(f"unknown key gv_profile.segments[{i}].{key}", _line_of(text, key))
        try:
            segments.append(
                Segment(
                    kind=seg.get("type", "straight"),
                    duration=float(seg["duration"]),
                    target_speed=float(seg["target_speed"]),
                    grade_pct=float(seg.get("grade_pct", 0.0)),
                    turn_deg=float(seg.get("turn_deg", 0.0)),
                )
            )
        except KeyError as exc:
            raise ConfigError(f"gv_profile.segments[{i}]: missing {exc}", _line_of(text, "segments")) from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"gv_profile.segments[{i}]: {exc}", _line_of(text, "segments")) from None
    try:
        return GvProfile(
            segments=segments,
            start_position=tuple(float(c) for c in data.get("start_position", (0.0, 0.0, 0.0))),
            start_heading=math.radians(float(data.get("start_heading_deg", 0.0))),
            start_speed=float(data.get("start_speed", 0.0)),
            start_grade_pct=float(data.get("start_grade_pct", 0.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"gv_profile: {exc}", _line_of(text, "gv_profile")) from None


def scenario_from_dict(data: dict, text: str | None = None) -> Scenario:
    """Build a :class:`Scenario`; ``text`` (the raw file) anchors errors."""
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object", 1)
    allowed = {"scenario", *_SECTIONS, "gv_profile"}
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown section {key!r}", _line_of(text, key))
    kwargs = {name: _build(cls, data.get(name, {}), name, text) for name, cls in _SECTIONS.items()}
    if "gv_profile" in data:
        kwargs["gv_profile"] = _build_profile(data["gv_profile"], text)
    top = data.get("scenario", {})
    if not isinstance(top, dict):
        raise ConfigError("scenario: expected an object", _line_of(text, "scenario"))
    top_fields = {f.name for f in dataclasses.fields(Scenario)} - set(_SECTIONS) - {"gv_profile"}
    hints = typing.get_type_hints(Scenario)
    for key, value in top.items():
        if key not in top_fields:
            raise ConfigError(f"unknown key scenario.{key}", _line_of(text, key))
        kwargs[key] = _coerce(hints[key], value, f"scenario.{key}", text)
    try:
        return Scenario(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"scenario: {exc}", _line_of(text, "scenario")) from None


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg} (column {exc.colno})", exc.lineno) from None
    return scenario_from_dict(data, text)


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {
            f.name: _plain(getattr(obj, f.name))
            for f in dataclasses.fields(obj)
            if f.init and not f.name.startswith("_")
        }
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "tolist"):
        return obj.tolist()
    return obj


def profile_to_dict(p: GvProfile) -> dict:
    return {
        "start_position": list(p.start_position),
        "start_heading_deg": math.degrees(p.start_heading),
        "start_speed": p.start_speed,
        "start_grade_pct": p.start_grade_pct,
        "segments": [
            {
                "type": s.kind,
                "duration": s.duration,
                "target_speed": s.target_speed,
                "grade_pct": s.grade_pct,
                "turn_deg": s.turn_deg,
            }
            for s in p.segments
        ],
    }


def scenario_to_dict(sc: Scenario) -> dict:
    """Fully resolved config in the file schema (round-trips exactly)."""
    top = {
        f.name: _plain(getattr(sc, f.name))
        for f in dataclasses.fields(Scenario)
        if f.name not in _SECTIONS and f.name != "gv_profile"
    }
    out = {"scenario": top}
    for name in _SECTIONS:
        out[name] = _plain(getattr(sc, name))
    out["gv_profile"] = profile_to_dict(sc.gv_profile)
    return out


def nominal_scenario(seed: int = 0, **overrides) -> Scenario:
    """Car ramping to 14 m/s on a 2% climb, MAV starting 30 m behind at 10 m."""
    profile = GvProfile(
        segments=(
            Segment("straight", duration=2.0, target_speed=0.0, grade_pct=2.0),
            Segment("straight", duration=10.0, target_speed=14.0, grade_pct=2.0),
            Segment("straight", duration=60.0, target_speed=14.0, grade_pct=2.0),
        ),
        start_grade_pct=2.0,
    )
    kw = dict(seed=seed, duration=40.0, gv_profile=profile)
    kw.update(overrides)
    return Scenario(**kw)

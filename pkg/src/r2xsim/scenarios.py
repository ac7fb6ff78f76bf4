"""Scenario files and the runners for the three demo families.

A scenario is a strict JSON document (``schema_version`` 1). Unknown fields
are rejected at every level, mirroring the orchestrator's configuration
strictness, and every validation error names the offending field.

Three kinds are supported:

  warehouse -- multi-robot navigation with scripted humans, a path-gain map,
               and the four baseline methods executed by the closed-loop
               engine
  mcs       -- link-adaptation policies replayed over AR(1) shadowing traces
               on a synthetic corridor
  followme  -- person-following trace replay where the sensing mode is fixed
               or driven by the RSSI ladder, scored with CTA and UTFR
"""

from __future__ import annotations

import dataclasses
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .linkadapt import PolicySpec, run_policy
from .metrics import tail_stats, utfr
from .orchestrator import (
    WAREHOUSE_METHODS,
    LoopBudget,
    RuleIntentEngine,
    WarehouseSimulation,
    correct_loop,
    select_sense_mode,
)
from .radio import (
    DEFAULT_BANDWIDTH_HZ,
    DEFAULT_NOISE_DBM,
    DEFAULT_SLOT_S,
    McsTable,
    PathGainMap,
    RadioConfig,
    default_mcs_table,
    sample_trace,
)
from .sensing import SenseConfig
from .world import GridWorld, HumanTrack, RobotState

SCENARIO_KINDS = ("warehouse", "mcs", "followme")
FOLLOWME_METHODS = (
    "jpeg_q95",
    "jpeg_q80",
    "jpeg_q60",
    "vq_1x1",
    "vq_1x2",
    "vq_1x3",
    "orchestrated",
)
_MCS_METHOD_RE = re.compile(r"^(?:oracle|ideal|(?:delayed|predictive)_(\d+))$")

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Raised when a scenario file fails validation."""

    def __init__(self, errors: Sequence[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


# --------------------------------------------------------------------------
# validation helpers


class _Checker:
    def __init__(self) -> None:
        self.errors: List[str] = []

    def fail(self, path: str, msg: str) -> None:
        self.errors.append(f"{path}: {msg}")

    def obj(self, value, path: str, allowed: Sequence[str], required: Sequence[str]) -> Optional[dict]:
        if not isinstance(value, dict):
            self.fail(path, "must be an object")
            return None
        for key in value:
            if key not in allowed:
                self.fail(f"{path}.{key}", "unknown field")
        for key in required:
            if key not in value:
                self.fail(f"{path}.{key}", "required field missing")
        return value

    def num(self, d: dict, path: str, key: str, lo: Optional[float] = None, default=None):
        if key not in d:
            return default
        v = d[key]
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            self.fail(f"{path}.{key}", f"{v!r} must be a number")
            return default
        if lo is not None and v < lo:
            self.fail(f"{path}.{key}", f"{v!r} must be >= {lo}")
            return default
        return float(v)

    def integer(self, d: dict, path: str, key: str, lo: Optional[int] = None, default=None):
        if key not in d:
            return default
        v = d[key]
        if not isinstance(v, int) or isinstance(v, bool):
            self.fail(f"{path}.{key}", f"{v!r} must be an integer")
            return default
        if lo is not None and v < lo:
            self.fail(f"{path}.{key}", f"{v!r} must be >= {lo}")
            return default
        return v

    def cell(self, value, path: str) -> Optional[Tuple[int, int]]:
        if (
            isinstance(value, (list, tuple))
            and len(value) == 2
            and all(isinstance(c, int) and not isinstance(c, bool) for c in value)
        ):
            return (value[0], value[1])
        self.fail(path, f"{value!r} must be an [x, y] integer pair")
        return None

    def curve(self, d: dict, path: str, key: str, min_points: int = 2) -> Optional[List[Tuple[float, float]]]:
        raw = d.get(key)
        if not isinstance(raw, list) or len(raw) < min_points:
            self.fail(f"{path}.{key}", f"must be a list of at least {min_points} [x, y] pairs")
            return None
        pts = []
        for i, p in enumerate(raw):
            if (
                not isinstance(p, (list, tuple))
                or len(p) != 2
                or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in p)
            ):
                self.fail(f"{path}.{key}[{i}]", f"{p!r} must be an [x, y] number pair")
                return None
            pts.append((float(p[0]), float(p[1])))
        xs = [p[0] for p in pts]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            self.fail(f"{path}.{key}", "x values must be strictly increasing")
            return None
        return pts


def _rect_cells(rect: Tuple[int, int, int, int]) -> List[Tuple[int, int]]:
    x0, y0, x1, y1 = rect
    return [(x, y) for x in range(x0, x1 + 1) for y in range(y0, y1 + 1)]


# --------------------------------------------------------------------------
# scenario document


@dataclass
class Scenario:
    id: str
    kind: str
    seeds: Tuple[int, ...]
    methods: Tuple[str, ...]
    params: dict
    path: Optional[Path] = None

    def with_overrides(
        self,
        seeds: Optional[Sequence[int]] = None,
        methods: Optional[Sequence[str]] = None,
    ) -> "Scenario":
        out = dataclasses.replace(self)
        if seeds is not None:
            out = dataclasses.replace(out, seeds=tuple(seeds))
        if methods is not None:
            unknown = [m for m in methods if m not in self.methods]
            if unknown:
                raise ScenarioError(
                    [f"methods: {m!r} not offered by scenario {self.id!r} "
                     f"(available: {list(self.methods)})" for m in unknown]
                )
            out = dataclasses.replace(out, methods=tuple(methods))
        return out


def validate_scenario_dict(data) -> List[str]:
    """All schema violations in a parsed scenario document."""
    ck = _Checker()
    top = ck.obj(
        data,
        "scenario",
        ("schema_version", "id", "kind", "description", "seeds", "methods",
         "warehouse", "mcs", "followme"),
        ("schema_version", "id", "kind", "seeds", "methods"),
    )
    if top is None:
        return ck.errors
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        ck.fail("scenario.schema_version", f"{version!r} is not the supported version {SCHEMA_VERSION}")
    sid = data.get("id")
    if not isinstance(sid, str) or not sid:
        ck.fail("scenario.id", f"{sid!r} must be a nonempty string")
    kind = data.get("kind")
    if kind not in SCENARIO_KINDS:
        ck.fail("scenario.kind", f"{kind!r} is not one of {set(SCENARIO_KINDS)}")
        return ck.errors
    seeds = data.get("seeds")
    if (
        not isinstance(seeds, list)
        or not seeds
        or not all(isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in seeds)
    ):
        ck.fail("scenario.seeds", "must be a nonempty list of nonnegative integers")
    elif len(set(seeds)) != len(seeds):
        ck.fail("scenario.seeds", "seeds must be distinct")
    methods = data.get("methods")
    if not isinstance(methods, list) or not methods or not all(isinstance(m, str) for m in methods):
        ck.fail("scenario.methods", "must be a nonempty list of method names")
    else:
        for m in methods:
            if kind == "warehouse" and m not in WAREHOUSE_METHODS:
                ck.fail("scenario.methods", f"{m!r} is not one of {set(WAREHOUSE_METHODS)}")
            elif kind == "mcs" and not _MCS_METHOD_RE.match(m):
                ck.fail(
                    "scenario.methods",
                    f"{m!r} must be 'oracle', 'ideal', 'delayed_<d>' or 'predictive_<d>'",
                )
            elif kind == "followme" and m not in FOLLOWME_METHODS:
                ck.fail("scenario.methods", f"{m!r} is not one of {set(FOLLOWME_METHODS)}")
    for other in SCENARIO_KINDS:
        if other != kind and other in data:
            ck.fail(f"scenario.{other}", f"section not allowed for kind {kind!r}")
    section = data.get(kind)
    if section is None:
        ck.fail(f"scenario.{kind}", "required section missing")
        return ck.errors
    if kind == "warehouse":
        _validate_warehouse(ck, section)
    elif kind == "mcs":
        _validate_mcs(ck, section)
    else:
        _validate_followme(ck, section)
    return ck.errors


def _validate_warehouse(ck: _Checker, sec) -> None:
    p = "scenario.warehouse"
    sec = ck.obj(
        sec, p,
        ("world", "robots", "humans", "gain", "radio", "budget", "payloads",
         "intent_text", "max_sim_time_s"),
        ("world", "robots", "gain", "budget", "payloads", "intent_text"),
    )
    if sec is None:
        return
    world = ck.obj(
        sec.get("world"), f"{p}.world",
        ("width", "height", "cell_size_m", "frame_period_s", "cell_traverse_s",
         "blocked", "blocked_rects"),
        ("width", "height"),
    )
    width = height = None
    blocked: set = set()
    if world is not None:
        width = ck.integer(world, f"{p}.world", "width", lo=1)
        height = ck.integer(world, f"{p}.world", "height", lo=1)
        ck.num(world, f"{p}.world", "cell_size_m", lo=0.0)
        ck.num(world, f"{p}.world", "frame_period_s", lo=0.0)
        ck.num(world, f"{p}.world", "cell_traverse_s", lo=0.0)
        for i, raw in enumerate(world.get("blocked", [])):
            cell = ck.cell(raw, f"{p}.world.blocked[{i}]")
            if cell:
                blocked.add(cell)
        for i, raw in enumerate(world.get("blocked_rects", [])):
            if (
                isinstance(raw, (list, tuple))
                and len(raw) == 4
                and all(isinstance(c, int) and not isinstance(c, bool) for c in raw)
            ):
                blocked.update(_rect_cells(tuple(raw)))
            else:
                ck.fail(f"{p}.world.blocked_rects[{i}]", f"{raw!r} must be [x0, y0, x1, y1]")

    def in_world(cell: Tuple[int, int]) -> bool:
        return (
            width is not None and height is not None
            and 0 <= cell[0] < width and 0 <= cell[1] < height
        )

    robots = sec.get("robots")
    seen_ids = set()
    starts = []
    goals = []
    if not isinstance(robots, list) or not robots:
        ck.fail(f"{p}.robots", "must be a nonempty list")
    else:
        for i, raw in enumerate(robots):
            rp = f"{p}.robots[{i}]"
            robj = ck.obj(raw, rp, ("id", "start", "goal"), ("id", "start", "goal"))
            if robj is None:
                continue
            rid = ck.integer(robj, rp, "id", lo=0)
            if rid in seen_ids:
                ck.fail(f"{rp}.id", f"duplicate robot id {rid}")
            seen_ids.add(rid)
            for key, bucket in (("start", starts), ("goal", goals)):
                cell = ck.cell(robj.get(key), f"{rp}.{key}")
                if cell is not None:
                    bucket.append(cell)
                    if in_world(cell) and cell in blocked:
                        ck.fail(f"{rp}.{key}", f"cell {cell} is blocked")
                    if width is not None and not in_world(cell):
                        ck.fail(f"{rp}.{key}", f"cell {cell} outside {width}x{height} world")
        if len(set(starts)) != len(starts):
            ck.fail(f"{p}.robots", "robot starts must be distinct")
        if len(set(goals)) != len(goals):
            ck.fail(f"{p}.robots", "robot goals must be distinct")

    for i, raw in enumerate(sec.get("humans", [])):
        hp = f"{p}.humans[{i}]"
        hobj = ck.obj(raw, hp, ("waypoints", "horizon_frames"), ("waypoints",))
        if hobj is None:
            continue
        ck.integer(hobj, hp, "horizon_frames", lo=1)
        wps = hobj.get("waypoints")
        if not isinstance(wps, list) or not wps:
            ck.fail(f"{hp}.waypoints", "must be a nonempty list of cells")
            continue
        prev = None
        for j, wraw in enumerate(wps):
            cell = ck.cell(wraw, f"{hp}.waypoints[{j}]")
            if cell is None:
                break
            if width is not None and not in_world(cell):
                ck.fail(f"{hp}.waypoints[{j}]", f"cell {cell} outside the world")
            if prev is not None and abs(cell[0] - prev[0]) + abs(cell[1] - prev[1]) > 1:
                ck.fail(f"{hp}.waypoints[{j}]", f"{prev} -> {cell} is not a stand or 4-neighbor move")
            prev = cell

    gain = ck.obj(
        sec.get("gain"), f"{p}.gain",
        ("base_gain_db", "ap", "slope_db_per_cell", "dead_zones",
         "shadowing_rho", "shadowing_sigma_db"),
        ("base_gain_db", "ap", "slope_db_per_cell"),
    )
    if gain is not None:
        ck.num(gain, f"{p}.gain", "base_gain_db")
        ck.num(gain, f"{p}.gain", "slope_db_per_cell", lo=0.0)
        rho = ck.num(gain, f"{p}.gain", "shadowing_rho", default=0.0)
        if rho is not None and not (0.0 <= rho < 1.0):
            ck.fail(f"{p}.gain.shadowing_rho", f"{rho!r} must be in [0, 1)")
        ck.num(gain, f"{p}.gain", "shadowing_sigma_db", lo=0.0)
        ck.cell(gain.get("ap"), f"{p}.gain.ap")
        for i, raw in enumerate(gain.get("dead_zones", [])):
            zp = f"{p}.gain.dead_zones[{i}]"
            zobj = ck.obj(raw, zp, ("rect", "extra_loss_db"), ("rect", "extra_loss_db"))
            if zobj is None:
                continue
            rect = zobj.get("rect")
            if not (
                isinstance(rect, (list, tuple))
                and len(rect) == 4
                and all(isinstance(c, int) and not isinstance(c, bool) for c in rect)
            ):
                ck.fail(f"{zp}.rect", f"{rect!r} must be [x0, y0, x1, y1]")
            ck.num(zobj, zp, "extra_loss_db", lo=0.0)

    _validate_radio(ck, sec.get("radio"), f"{p}.radio")

    budget = ck.obj(
        sec.get("budget"), f"{p}.budget",
        ("detection_s", "encode_s", "link_context_s", "orchestration_s", "deadline_s"),
        ("detection_s", "encode_s", "link_context_s", "orchestration_s"),
    )
    if budget is not None:
        for key in ("detection_s", "encode_s", "link_context_s", "orchestration_s", "deadline_s"):
            ck.num(budget, f"{p}.budget", key, lo=0.0)

    payloads = ck.obj(sec.get("payloads"), f"{p}.payloads", ("raw", "semantic_feature"),
                      ("raw", "semantic_feature"))
    if payloads is not None:
        ck.integer(payloads, f"{p}.payloads", "raw", lo=1)
        ck.integer(payloads, f"{p}.payloads", "semantic_feature", lo=1)

    if not isinstance(sec.get("intent_text"), str):
        ck.fail(f"{p}.intent_text", "must be a string")
    ck.num(sec, p, "max_sim_time_s", lo=1.0)


def _validate_radio(ck: _Checker, radio, path: str) -> None:
    if radio is None:
        return
    robj = ck.obj(
        radio, path,
        ("target_snr_db", "max_power_dbm", "max_retx", "noise_dbm", "bandwidth_hz", "slot_s"),
        (),
    )
    if robj is None:
        return
    ck.num(robj, path, "target_snr_db")
    ck.num(robj, path, "max_power_dbm")
    ck.integer(robj, path, "max_retx", lo=0)
    ck.num(robj, path, "noise_dbm")
    ck.num(robj, path, "bandwidth_hz", lo=1.0)
    ck.num(robj, path, "slot_s", lo=0.0)


def _validate_mcs(ck: _Checker, sec) -> None:
    p = "scenario.mcs"
    sec = ck.obj(
        sec, p,
        ("steps", "corridor_cells", "gain_profile", "shadowing_rho", "shadowing_sigma_db",
         "payload_bytes", "bler_target", "radio"),
        ("steps", "corridor_cells", "gain_profile", "shadowing_rho", "shadowing_sigma_db",
         "payload_bytes"),
    )
    if sec is None:
        return
    ck.integer(sec, p, "steps", lo=1)
    ck.integer(sec, p, "corridor_cells", lo=2)
    prof = ck.obj(
        sec.get("gain_profile"), f"{p}.gain_profile",
        ("base_db", "amplitude_db", "period_cells"),
        ("base_db", "amplitude_db", "period_cells"),
    )
    if prof is not None:
        ck.num(prof, f"{p}.gain_profile", "base_db")
        ck.num(prof, f"{p}.gain_profile", "amplitude_db", lo=0.0)
        ck.num(prof, f"{p}.gain_profile", "period_cells", lo=1.0)
    rho = ck.num(sec, p, "shadowing_rho")
    if rho is not None and not (0.0 <= rho < 1.0):
        ck.fail(f"{p}.shadowing_rho", f"{rho!r} must be in [0, 1)")
    ck.num(sec, p, "shadowing_sigma_db", lo=0.0)
    ck.integer(sec, p, "payload_bytes", lo=1)
    target = ck.num(sec, p, "bler_target", default=0.1)
    if target is not None and not (0.0 < target < 1.0):
        ck.fail(f"{p}.bler_target", f"{target!r} must be in (0, 1)")
    _validate_radio(ck, sec.get("radio"), f"{p}.radio")


_FOLLOWME_FIXED = FOLLOWME_METHODS[:-1]


def _validate_followme(ck: _Checker, sec) -> None:
    p = "scenario.followme"
    sec = ck.obj(
        sec, p,
        ("total_steps", "frame_period_s", "distance_profile", "rssi_curve", "noise",
         "throughput_curve", "bit_error_curve", "codec_s", "payload_bytes", "perception",
         "cta_useful_s", "loss_threshold_steps", "max_attempts", "slot_s"),
        ("total_steps", "frame_period_s", "distance_profile", "rssi_curve", "noise",
         "throughput_curve", "bit_error_curve", "codec_s", "payload_bytes", "perception",
         "cta_useful_s", "loss_threshold_steps"),
    )
    if sec is None:
        return
    ck.integer(sec, p, "total_steps", lo=1)
    ck.num(sec, p, "frame_period_s", lo=0.0)
    ck.curve(sec, p, "distance_profile")
    ck.curve(sec, p, "rssi_curve")
    noise = ck.obj(sec.get("noise"), f"{p}.noise", ("rho", "sigma_db"), ("rho", "sigma_db"))
    if noise is not None:
        rho = ck.num(noise, f"{p}.noise", "rho")
        if rho is not None and not (0.0 <= rho < 1.0):
            ck.fail(f"{p}.noise.rho", f"{rho!r} must be in [0, 1)")
        ck.num(noise, f"{p}.noise", "sigma_db", lo=0.0)
    thr = ck.curve(sec, p, "throughput_curve")
    if thr is not None and any(y <= 0 for _, y in thr):
        ck.fail(f"{p}.throughput_curve", "throughputs must be positive")
    ber = ck.curve(sec, p, "bit_error_curve")
    if ber is not None and any(not (0.0 < y < 1.0) for _, y in ber):
        ck.fail(f"{p}.bit_error_curve", "bit error probabilities must be in (0, 1)")
    codec = ck.obj(sec.get("codec_s"), f"{p}.codec_s", ("jpeg", "vq"), ("jpeg", "vq"))
    if codec is not None:
        for key in ("jpeg", "vq"):
            pair = codec.get(key)
            if not (
                isinstance(pair, (list, tuple))
                and len(pair) == 2
                and all(isinstance(c, (int, float)) and not isinstance(c, bool) and c >= 0 for c in pair)
            ):
                ck.fail(f"{p}.codec_s.{key}", f"{pair!r} must be [encode_s, decode_s]")
    payloads = ck.obj(sec.get("payload_bytes"), f"{p}.payload_bytes", _FOLLOWME_FIXED, _FOLLOWME_FIXED)
    if payloads is not None:
        for key in _FOLLOWME_FIXED:
            ck.integer(payloads, f"{p}.payload_bytes", key, lo=1)
    perc = ck.obj(
        sec.get("perception"), f"{p}.perception",
        ("lose_prob", "far_lose_prob", "far_distance_m", "reacquire_prob"),
        ("lose_prob", "far_lose_prob", "far_distance_m", "reacquire_prob"),
    )
    if perc is not None:
        for key, must_prob in (
            ("lose_prob", True), ("far_lose_prob", True),
            ("far_distance_m", False), ("reacquire_prob", True),
        ):
            table = ck.obj(perc.get(key), f"{p}.perception.{key}", _FOLLOWME_FIXED, _FOLLOWME_FIXED)
            if table is None:
                continue
            for mode in _FOLLOWME_FIXED:
                v = ck.num(table, f"{p}.perception.{key}", mode, lo=0.0)
                if must_prob and v is not None and v > 1.0:
                    ck.fail(f"{p}.perception.{key}.{mode}", f"{v!r} must be in [0, 1]")
    ck.num(sec, p, "cta_useful_s", lo=0.0)
    ck.integer(sec, p, "loss_threshold_steps", lo=0)
    ck.integer(sec, p, "max_attempts", lo=1)
    ck.num(sec, p, "slot_s", lo=0.0)


def parse_scenario(data: dict, path: Optional[Path] = None) -> Scenario:
    errors = validate_scenario_dict(data)
    if errors:
        raise ScenarioError(errors)
    return Scenario(
        id=data["id"],
        kind=data["kind"],
        seeds=tuple(data["seeds"]),
        methods=tuple(data["methods"]),
        params=data[data["kind"]],
        path=path,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError([f"{path}: cannot read: {exc}"]) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{path}:{exc.lineno}: invalid JSON: {exc.msg}"]) from exc
    try:
        return parse_scenario(data, path)
    except ScenarioError as exc:
        raise ScenarioError([f"{path}: {e}" for e in exc.errors]) from exc


# --------------------------------------------------------------------------
# warehouse family


def synthetic_gain_map(width: int, height: int, gain: dict) -> PathGainMap:
    """Distance-falloff gain map with optional rectangular dead zones."""
    ap = tuple(gain["ap"])
    base = float(gain["base_gain_db"])
    slope = float(gain["slope_db_per_cell"])
    ys, xs = np.mgrid[0:height, 0:width]
    dist = np.hypot(xs - ap[0], ys - ap[1])
    gains = base - slope * dist
    for zone in gain.get("dead_zones", []):
        x0, y0, x1, y1 = zone["rect"]
        gains[y0 : y1 + 1, x0 : x1 + 1] -= float(zone["extra_loss_db"])
    return PathGainMap(
        gains=gains,
        shadowing_rho=float(gain.get("shadowing_rho", 0.0)),
        shadowing_sigma_db=float(gain.get("shadowing_sigma_db", 0.0)),
    )


def _radio_overrides(cfg: RadioConfig, radio: Optional[dict]) -> RadioConfig:
    if not radio:
        return cfg
    fields = {}
    for key in ("target_snr_db", "max_power_dbm", "max_retx", "noise_dbm"):
        if key in radio:
            fields[key] = radio[key]
    return dataclasses.replace(cfg, **fields) if fields else cfg


def _mcs_table(radio: Optional[dict]) -> McsTable:
    table = default_mcs_table()
    if not radio:
        return table
    fields = {}
    if "bandwidth_hz" in radio:
        fields["bandwidth_hz"] = float(radio["bandwidth_hz"])
    if "slot_s" in radio:
        fields["slot_s"] = float(radio["slot_s"])
    return dataclasses.replace(table, **fields) if fields else table


def build_warehouse(scn: Scenario):
    """Instantiate world, robots, tracks, gain map, and configuration."""
    sec = scn.params
    w = sec["world"]
    blocked = {tuple(c) for c in w.get("blocked", [])}
    for rect in w.get("blocked_rects", []):
        blocked.update(_rect_cells(tuple(rect)))
    world = GridWorld(
        width=w["width"],
        height=w["height"],
        cell_size_m=float(w.get("cell_size_m", 2.0)),
        blocked=frozenset(blocked),
        frame_period_s=float(w.get("frame_period_s", 0.5)),
        cell_traverse_s=float(w.get("cell_traverse_s", 1.4)),
    )
    robots = [
        RobotState(r["id"], tuple(r["start"]), tuple(r["goal"])) for r in sec["robots"]
    ]
    tracks = [
        HumanTrack(
            waypoints=tuple(tuple(c) for c in h["waypoints"]),
            horizon_frames=h.get("horizon_frames", 3),
        )
        for h in sec.get("humans", [])
    ]
    gain_map = synthetic_gain_map(world.width, world.height, sec["gain"])
    ids = sorted(r.id for r in robots)
    resolution = correct_loop(RuleIntentEngine(), sec["intent_text"], {"robot_ids": ids})
    cfg = resolution.config
    cfg = dataclasses.replace(cfg, ra=_radio_overrides(cfg.ra, sec.get("radio")))
    b = sec["budget"]
    budget = LoopBudget(
        detection_s=float(b["detection_s"]),
        encode_s=float(b["encode_s"]),
        link_context_s=float(b["link_context_s"]),
        orchestration_s=float(b["orchestration_s"]),
        deadline_s=float(b.get("deadline_s", world.cell_traverse_s)),
    )
    table = _mcs_table(sec.get("radio"))
    return world, robots, tracks, gain_map, table, cfg, budget


def run_warehouse(scn: Scenario, method: str, seed: int) -> dict:
    world, robots, tracks, gain_map, table, cfg, budget = build_warehouse(scn)
    sim = WarehouseSimulation(
        world, robots, tracks, gain_map, table, cfg, budget, method, seed,
        payload_table=scn.params["payloads"],
        max_sim_time_s=float(scn.params.get("max_sim_time_s", 3600.0)),
    )
    record = sim.run()
    return {
        "scenario_id": scn.id,
        "kind": scn.kind,
        "method": method,
        "seed": seed,
        "metrics": record.as_metrics(),
    }


# --------------------------------------------------------------------------
# mcs family


def mcs_policy_from_method(method: str) -> PolicySpec:
    if method == "oracle":
        return PolicySpec(kind="oracle")
    if method == "ideal":
        return PolicySpec(kind="ideal")
    name, delay = method.rsplit("_", 1)
    if name == "delayed":
        return PolicySpec(kind="delayed", delay=int(delay))
    if name == "predictive":
        return PolicySpec(kind="predictive", delay=int(delay), predictor="map_aware")
    raise ValueError(f"unknown mcs method {method!r}")


def build_mcs_corridor(scn: Scenario) -> Tuple[PathGainMap, List[Tuple[int, int]], RadioConfig, McsTable]:
    sec = scn.params
    n = sec["corridor_cells"]
    prof = sec["gain_profile"]
    xs = np.arange(n)
    row = prof["base_db"] + prof["amplitude_db"] * np.sin(2 * math.pi * xs / prof["period_cells"])
    gain_map = PathGainMap(
        gains=row[np.newaxis, :],
        shadowing_rho=float(sec["shadowing_rho"]),
        shadowing_sigma_db=float(sec["shadowing_sigma_db"]),
    )
    steps = sec["steps"]
    forward = list(range(n)) + list(range(n - 2, 0, -1))
    cells = [(forward[t % len(forward)], 0) for t in range(steps)]
    cfg = _radio_overrides(RadioConfig(), sec.get("radio"))
    table = _mcs_table(sec.get("radio"))
    return gain_map, cells, cfg, table


def run_mcs(scn: Scenario, method: str, seed: int) -> dict:
    sec = scn.params
    gain_map, cells, cfg, table = build_mcs_corridor(scn)
    trace = sample_trace(gain_map, cells, cfg, seed)
    spec = mcs_policy_from_method(method)
    series = run_policy(
        trace,
        spec,
        table,
        sec["payload_bytes"],
        bler_target=float(sec.get("bler_target", 0.1)),
        seed=seed,
        cells=cells,
        gain_map=gain_map,
        max_retx=cfg.max_retx,
    )
    metrics = {
        "throughput_mean_bps": series.mean_throughput_bps,
        "latency_mean_s": series.mean_latency_s,
        "success_rate": float(np.mean(series.success)),
        "bler_mass_le_target": series.bler_mass_at_or_below(
            float(sec.get("bler_target", 0.1))
        ),
    }
    return {
        "scenario_id": scn.id,
        "kind": scn.kind,
        "method": method,
        "seed": seed,
        "metrics": metrics,
    }


# --------------------------------------------------------------------------
# followme family


_FOLLOWME_MODE_CONFIGS = {
    "jpeg_q95": SenseConfig(mode="jpeg", jpeg_quality=95, qos="reliable"),
    "jpeg_q80": SenseConfig(mode="jpeg", jpeg_quality=80, qos="reliable"),
    "jpeg_q60": SenseConfig(mode="jpeg", jpeg_quality=60, qos="reliable"),
    "vq_1x1": SenseConfig(mode="vq", vit_grid=(1, 1), qos="best_effort"),
    "vq_1x2": SenseConfig(mode="vq", vit_grid=(1, 2), qos="best_effort"),
    "vq_1x3": SenseConfig(mode="vq", vit_grid=(1, 3), qos="best_effort"),
}


def _mode_name(cfg: SenseConfig) -> str:
    if cfg.mode == "jpeg":
        return f"jpeg_q{cfg.jpeg_quality}"
    return f"vq_{cfg.vit_grid[0]}x{cfg.vit_grid[1]}"


def _log_interp(x: float, pts: Sequence[Tuple[float, float]]) -> float:
    xs = [p[0] for p in pts]
    ys = [math.log10(p[1]) for p in pts]
    return 10.0 ** float(np.interp(x, xs, ys))


def _lin_interp(x: float, pts: Sequence[Tuple[float, float]]) -> float:
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    return float(np.interp(x, xs, ys))


def run_followme(scn: Scenario, method: str, seed: int) -> dict:
    """Replay the corridor trace under one sensing policy.

    Per frame: the user distance sets the mean RSSI (plus AR(1) noise), the
    RSSI sets link throughput and per-bit loss. Reliable modes retransmit up
    to ``max_attempts``; best-effort modes get one shot. A frame counts as a
    tracking arrival when it was delivered, its command-to-action latency is
    within ``cta_useful_s``, and the perception tracker holds (or regains)
    lock on it.
    """
    sec = scn.params
    total = sec["total_steps"]
    rho = float(sec["noise"]["rho"])
    sigma = float(sec["noise"]["sigma_db"])
    rng_noise = np.random.default_rng([seed, 21])
    rng_loss = np.random.default_rng([seed, 22])
    rng_perc = np.random.default_rng([seed, 23])
    noise = np.zeros(total)
    if sigma > 0:
        noise[0] = rng_noise.normal(0.0, sigma)
        innov = sigma * math.sqrt(1.0 - rho * rho)
        for i in range(1, total):
            noise[i] = rho * noise[i - 1] + rng_noise.normal(0.0, innov)

    perc = sec["perception"]
    codec = sec["codec_s"]
    payloads = sec["payload_bytes"]
    max_attempts = int(sec.get("max_attempts", 4))
    slot_s = float(sec.get("slot_s", 0.001))
    cta_bound = float(sec["cta_useful_s"])

    fixed_cfg = _FOLLOWME_MODE_CONFIGS.get(method)
    locked = True
    arrivals: List[int] = []
    cta_samples: List[float] = []
    delivered_count = 0
    for t in range(total):
        distance = _lin_interp(t, sec["distance_profile"])
        rssi = _lin_interp(distance, sec["rssi_curve"]) + noise[t]
        cfg = fixed_cfg if fixed_cfg is not None else select_sense_mode(rssi)
        mode = _mode_name(cfg)
        bits = payloads[mode] * 8
        throughput = _log_interp(rssi, sec["throughput_curve"])
        p_bit = _log_interp(rssi, sec["bit_error_curve"])
        p_loss = -math.expm1(bits * math.log1p(-p_bit))
        attempts_allowed = max_attempts if cfg.qos == "reliable" else 1
        attempts = 0
        delivered = False
        for _ in range(attempts_allowed):
            attempts += 1
            if rng_loss.random() >= p_loss:
                delivered = True
                break
        useful = False
        if delivered:
            delivered_count += 1
            enc, dec = codec["jpeg"] if cfg.mode == "jpeg" else codec["vq"]
            cta = enc + attempts * (bits / throughput + slot_s) + dec
            cta_samples.append(cta)
            useful = cta <= cta_bound
        if locked:
            far = distance > perc["far_distance_m"][mode]
            lose_p = perc["far_lose_prob"][mode] if far else perc["lose_prob"][mode]
            if rng_perc.random() < lose_p:
                locked = False
        elif delivered and useful:
            if rng_perc.random() < perc["reacquire_prob"][mode]:
                locked = True
        if delivered and useful and locked:
            arrivals.append(t)

    metrics: Dict[str, float] = {
        "utfr_pct": utfr(arrivals, total, sec["loss_threshold_steps"]),
        "delivered_frames": float(delivered_count),
        "arrival_frames": float(len(arrivals)),
    }
    if cta_samples:
        mean, _, p95 = tail_stats(cta_samples)
        metrics["cta_mean_s"] = mean
        metrics["cta_p95_s"] = p95
    return {
        "scenario_id": scn.id,
        "kind": scn.kind,
        "method": method,
        "seed": seed,
        "metrics": metrics,
    }


# --------------------------------------------------------------------------


def run_one(scn: Scenario, method: str, seed: int) -> dict:
    if method not in scn.methods:
        raise ScenarioError(
            [f"methods: {method!r} not offered by scenario {scn.id!r}"]
        )
    if scn.kind == "warehouse":
        return run_warehouse(scn, method, seed)
    if scn.kind == "mcs":
        return run_mcs(scn, method, seed)
    return run_followme(scn, method, seed)


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario shipped with the package (name without .json)."""
    here = Path(__file__).parent / "scenarios"
    path = here / f"{name}.json"
    if not path.exists():
        available = sorted(p.stem for p in here.glob("*.json"))
        raise FileNotFoundError(f"no bundled scenario {name!r}; available: {available}")
    return path

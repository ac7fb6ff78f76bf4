"""Intent-to-configuration orchestration and the closed-loop warehouse engine.

An operator intent (free text) is turned into a strict configuration message
(planning objective, radio fairness, sensing mode), validated, and corrected
or replaced by a conservative fallback. The warehouse engine executes the
resulting configuration: robots uplink sensing payloads, a central planner
replans every cell transition, and robots wait whenever the control loop has
not closed in time.
"""

from __future__ import annotations

import dataclasses
import heapq
import json
import math
import re
import socket
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from .metrics import KpiRecord, completion_time
from .planner import PlanConfig, PlanningError, SpaceTimePath, low_level_search, plan
from .radio import (
    McsTable,
    PathGainMap,
    RadioConfig,
    allocate,
    required_power,
    select_mcs,
    simulate_transmission,
)
from .sensing import SenseConfig, parse_vit_grid
from .world import Cell, GridWorld, HumanTrack, RobotState, human_forecast

WAREHOUSE_METHODS = ("stop_and_go", "lorc_p", "lorc_sc", "lorc_sc_p")

_WEIGHT_SUM_TOL = 1e-6


@dataclass(frozen=True)
class OrchestratorConfig:
    pp: PlanConfig
    ra: RadioConfig
    sense: SenseConfig
    fallback: bool = False


@dataclass(frozen=True)
class LoopBudget:
    """Fixed per-loop latency components, in seconds."""

    detection_s: float
    encode_s: float
    link_context_s: float
    orchestration_s: float
    deadline_s: float = 1.4

    @property
    def total_s(self) -> float:
        return self.detection_s + self.encode_s + self.link_context_s + self.orchestration_s


def loop_feasible(budget: LoopBudget) -> Tuple[float, bool]:
    """Total loop latency and whether it closes strictly inside the deadline."""
    total = budget.total_s
    return total, total < budget.deadline_s


def offload_gate(t_uplink_s: float, t_edge_s: float, t_downlink_s: float, t_wait_s: float) -> bool:
    """Offload only when the full round trip strictly undercuts the on-robot
    wait it replaces; equality stays local."""
    return t_uplink_s + t_edge_s + t_downlink_s < t_wait_s


def select_sense_mode(rssi_dbm: float) -> SenseConfig:
    """Payload ladder driven by measured RSSI.

    Strong links carry JPEG previews on the reliable class; as RSSI drops
    the payload steps down through token grids on best-effort, clamping at
    the single-tile token payload.
    """
    if rssi_dbm >= -39:
        return SenseConfig(mode="jpeg", jpeg_quality=80, qos="reliable")
    if rssi_dbm >= -41:
        return SenseConfig(mode="jpeg", jpeg_quality=60, qos="reliable")
    if rssi_dbm >= -43:
        return SenseConfig(mode="vq", vit_grid=(1, 3), qos="best_effort")
    if rssi_dbm >= -45:
        return SenseConfig(mode="vq", vit_grid=(1, 2), qos="best_effort")
    return SenseConfig(mode="vq", vit_grid=(1, 1), qos="best_effort")


# --------------------------------------------------------------------------
# configuration message schema


def _check_unknown(section: dict, path: str, allowed: Sequence[str], errors: List[str]) -> None:
    for key in section:
        if key not in allowed:
            errors.append(f"{path}.{key}: unknown field")


def fallback_message(robot_ids: Sequence[int] = (1, 2)) -> dict:
    """Conservative configuration used when intent resolution fails."""
    n = max(1, len(robot_ids))
    return {
        "pp_config": {
            "objective": "safety_first",
            "priority_robot": "none",
            "min_time_gap_at_conflict": 1,
        },
        "ra_config": {"fairness": "max_min", "priority_weights": [1.0 / n] * n},
        "sense_config": {"mode": "vq", "vit_grid": "1x1", "qos": "best_effort"},
    }


def validate(
    message: dict, robot_ids: Optional[Sequence[int]] = None
) -> Tuple[Optional[OrchestratorConfig], List[str]]:
    """Check a raw configuration message against the exact schema.

    Returns ``(config, [])`` on success or ``(None, errors)`` where every
    error names the offending field and the allowed domain. Unknown fields
    are errors at every level. ``sense_config`` is optional and defaults to
    the conservative single-tile token payload.
    """
    errors: List[str] = []
    if not isinstance(message, dict):
        return None, ["message: must be a JSON object"]
    _check_unknown(message, "message", ("pp_config", "ra_config", "sense_config"), errors)

    pp = message.get("pp_config")
    objective = "safety_first"
    priority: Optional[int] = None
    gap = 1
    if not isinstance(pp, dict):
        errors.append("pp_config: required object missing")
    else:
        _check_unknown(pp, "pp_config", ("objective", "priority_robot", "min_time_gap_at_conflict"), errors)
        objective = pp.get("objective")
        if objective not in ("makespan", "safety_first"):
            errors.append(
                f"pp_config.objective: {objective!r} is not one of {{'makespan', 'safety_first'}}"
            )
        if "priority_robot" not in pp:
            errors.append("pp_config.priority_robot: required field missing")
        else:
            raw = pp["priority_robot"]
            m = re.fullmatch(r"robot_(\d+)", raw) if isinstance(raw, str) else None
            if raw == "none":
                priority = None
            elif m:
                priority = int(m.group(1))
                if robot_ids is not None and priority not in robot_ids:
                    errors.append(
                        f"pp_config.priority_robot: robot_{priority} not among robots {sorted(robot_ids)}"
                    )
            else:
                errors.append(
                    f"pp_config.priority_robot: {raw!r} must be 'none' or 'robot_<id>'"
                )
        raw_gap = pp.get("min_time_gap_at_conflict")
        if not isinstance(raw_gap, int) or isinstance(raw_gap, bool) or raw_gap < 0:
            errors.append(
                f"pp_config.min_time_gap_at_conflict: {raw_gap!r} must be a nonnegative integer"
            )
        else:
            gap = raw_gap

    ra = message.get("ra_config")
    fairness = "max_min"
    weights: Tuple[float, ...] = (0.5, 0.5)
    if not isinstance(ra, dict):
        errors.append("ra_config: required object missing")
    else:
        _check_unknown(ra, "ra_config", ("fairness", "priority_weights"), errors)
        fairness = ra.get("fairness")
        if fairness not in ("max_min", "proportional"):
            errors.append(
                f"ra_config.fairness: {fairness!r} is not one of {{'max_min', 'proportional'}}"
            )
        raw_w = ra.get("priority_weights")
        if not isinstance(raw_w, (list, tuple)) or not raw_w or not all(
            isinstance(w, (int, float)) and not isinstance(w, bool) for w in raw_w
        ):
            errors.append("ra_config.priority_weights: must be a nonempty list of numbers")
        else:
            if any(w < 0 for w in raw_w):
                errors.append("ra_config.priority_weights: weights must be nonnegative")
            total = sum(raw_w)
            if abs(total - 1.0) > _WEIGHT_SUM_TOL:
                errors.append(
                    f"ra_config.priority_weights: sum {total:g} != 1 (tolerance {_WEIGHT_SUM_TOL})"
                )
            if robot_ids is not None and len(raw_w) != len(robot_ids):
                errors.append(
                    f"ra_config.priority_weights: {len(raw_w)} weights for {len(robot_ids)} robots"
                )
            weights = tuple(float(w) for w in raw_w)

    sense_raw = message.get("sense_config")
    sense = SenseConfig(mode="vq", vit_grid=(1, 1), qos="best_effort")
    if sense_raw is not None:
        if not isinstance(sense_raw, dict):
            errors.append("sense_config: must be an object")
        else:
            _check_unknown(
                sense_raw,
                "sense_config",
                ("mode", "jpeg_quality", "vit_grid", "feature_dim", "feature_bits", "qos"),
                errors,
            )
            mode = sense_raw.get("mode")
            if mode not in ("raw", "jpeg", "semantic_feature", "vq"):
                errors.append(
                    f"sense_config.mode: {mode!r} is not one of "
                    "{'raw', 'jpeg', 'semantic_feature', 'vq'}"
                )
            qos = sense_raw.get("qos", "best_effort")
            if qos not in ("reliable", "best_effort"):
                errors.append(
                    f"sense_config.qos: {qos!r} is not one of {{'reliable', 'best_effort'}}"
                )
            kwargs = {}
            if mode == "jpeg":
                q = sense_raw.get("jpeg_quality")
                if q not in (95, 80, 60):
                    errors.append(f"sense_config.jpeg_quality: {q!r} is not one of {{95, 80, 60}}")
                kwargs["jpeg_quality"] = q
            if mode == "vq":
                grid_raw = sense_raw.get("vit_grid", "1x1")
                try:
                    grid = parse_vit_grid(grid_raw)
                    if grid not in ((1, 1), (1, 2), (1, 3)):
                        raise ValueError
                    kwargs["vit_grid"] = grid
                except (ValueError, TypeError):
                    errors.append(
                        f"sense_config.vit_grid: {grid_raw!r} is not one of {{'1x1', '1x2', '1x3'}}"
                    )
            if mode == "semantic_feature":
                dim = sense_raw.get("feature_dim")
                bits = sense_raw.get("feature_bits")
                if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
                    errors.append(f"sense_config.feature_dim: {dim!r} must be a positive integer")
                if bits not in (4, 8, 16, 32):
                    errors.append(f"sense_config.feature_bits: {bits!r} is not one of {{4, 8, 16, 32}}")
                kwargs["feature_dim"] = dim
                kwargs["feature_bits"] = bits
            if not errors:
                sense = SenseConfig(mode=mode, qos=qos, **kwargs)

    if errors:
        return None, errors
    cfg = OrchestratorConfig(
        pp=PlanConfig(objective=objective, priority_robot=priority, min_time_gap_at_conflict=gap),
        ra=RadioConfig(fairness=fairness, priority_weights=weights),
        sense=sense,
    )
    return cfg, []


# --------------------------------------------------------------------------
# intent engines


class IntentEngineError(Exception):
    pass


class IntentEngine(Protocol):
    def propose(self, intent_text: str, context: dict, errors: Optional[List[str]] = None) -> dict:
        ...


_IMPORTANCE_WORDS = ("important", "priority", "critical", "urgent")


def _favored_robot(text: str, robot_ids: Sequence[int]) -> Optional[int]:
    """Robot named closest before an importance keyword, by majority vote."""
    mentions = [(m.start(), int(m.group(1))) for m in re.finditer(r"robot[\s_]*(\d+)", text)]
    mentions = [(pos, rid) for pos, rid in mentions if rid in robot_ids]
    if not mentions:
        return None
    votes: Dict[int, int] = {}
    for word in _IMPORTANCE_WORDS:
        for m in re.finditer(word, text):
            before = [(pos, rid) for pos, rid in mentions if pos < m.start()]
            if before:
                votes[before[-1][1]] = votes.get(before[-1][1], 0) + 1
    if not votes:
        return None
    best = max(votes.values())
    return min(rid for rid, v in votes.items() if v == best)


def rule_intent(intent_text: str, robot_ids: Sequence[int] = (1, 2)) -> dict:
    """Deterministic keyword rules mapping operator text to a raw
    configuration message.

    Safety wording selects the safety-first objective; "very safe" phrasing
    additionally widens the conflict gap to 3 steps unless an explicit
    "gap N" is given. Guaranteed-minimum-quality or worst-case wording
    selects max-min fairness. A robot named before importance keywords
    becomes the priority robot and receives 70% of the priority weight.
    """
    ids = sorted(robot_ids)
    if not intent_text or not intent_text.strip():
        return fallback_message(ids)
    text = intent_text.lower()

    safety = "safe" in text
    objective = "safety_first" if safety else "makespan"

    gap_match = re.search(r"gap\s+(\d+)", text)
    if gap_match:
        gap = int(gap_match.group(1))
    elif re.search(r"very\s+safe", text):
        gap = 3
    elif safety:
        gap = 1
    else:
        gap = 0

    favored = _favored_robot(text, ids)
    if favored is None:
        weights = [1.0 / len(ids)] * len(ids)
        priority = "none"
    else:
        rest = 0.3 / (len(ids) - 1) if len(ids) > 1 else 0.0
        weights = [0.7 if rid == favored else rest for rid in ids]
        priority = f"robot_{favored}"

    max_min = ("minimum quality" in text and "guarantee" in text) or "worst" in text
    fairness = "max_min" if max_min else "proportional"

    return {
        "pp_config": {
            "objective": objective,
            "priority_robot": priority,
            "min_time_gap_at_conflict": gap,
        },
        "ra_config": {"fairness": fairness, "priority_weights": weights},
    }


class RuleIntentEngine:
    """Offline engine backed by the deterministic keyword rules."""

    def propose(self, intent_text: str, context: dict, errors: Optional[List[str]] = None) -> dict:
        return rule_intent(intent_text, context.get("robot_ids", (1, 2)))


class ExternalIntentEngine:
    """Client for an external intent engine speaking line-delimited JSON.

    Each call opens a connection, writes one request line
    ``{"intent": ..., "context": ..., "errors": [...]}`` and reads one
    response line containing the raw configuration message.
    """

    def __init__(self, host: str, port: int, timeout_s: float = 5.0):
        self.host = host
        self.port = port
        self.timeout_s = timeout_s

    def propose(self, intent_text: str, context: dict, errors: Optional[List[str]] = None) -> dict:
        request = {"intent": intent_text, "context": context}
        if errors:
            request["errors"] = list(errors)
        try:
            with socket.create_connection((self.host, self.port), timeout=self.timeout_s) as sock:
                sock.sendall((json.dumps(request, sort_keys=True) + "\n").encode())
                buf = b""
                while not buf.endswith(b"\n"):
                    chunk = sock.recv(65536)
                    if not chunk:
                        break
                    buf += chunk
        except OSError as exc:
            raise IntentEngineError(f"intent engine unreachable: {exc}") from exc
        if not buf.strip():
            raise IntentEngineError("intent engine sent no response")
        try:
            return json.loads(buf.decode())
        except json.JSONDecodeError as exc:
            raise IntentEngineError(f"intent engine sent invalid JSON: {exc}") from exc


@dataclass
class IntentResolution:
    config: OrchestratorConfig
    attempts: int
    fallback: bool
    error_history: List[List[str]] = field(default_factory=list)


def correct_loop(
    engine: IntentEngine,
    intent_text: str,
    context: Optional[dict] = None,
    max_attempts: int = 3,
    timeout_s: float = 5.0,
) -> IntentResolution:
    """Propose, validate, and re-prompt with the validation errors.

    After ``max_attempts`` failed proposals (including engine errors and
    responses slower than ``timeout_s``) the conservative fallback
    configuration is returned with the ``fallback`` flag set.
    """
    context = dict(context or {})
    robot_ids = context.get("robot_ids")
    history: List[List[str]] = []
    last_errors: Optional[List[str]] = None
    for attempt in range(1, max_attempts + 1):
        started = time.monotonic()
        try:
            message = engine.propose(intent_text, context, errors=last_errors)
        except Exception as exc:  # engine failures must not escape the loop
            last_errors = [f"engine: {exc}"]
            history.append(last_errors)
            continue
        if time.monotonic() - started > timeout_s:
            last_errors = [f"engine: response exceeded {timeout_s} s budget"]
            history.append(last_errors)
            continue
        cfg, errors = validate(message, robot_ids)
        if cfg is not None:
            return IntentResolution(cfg, attempt, False, history)
        last_errors = errors
        history.append(errors)
    cfg, errors = validate(fallback_message(robot_ids or (1, 2)), robot_ids)
    assert cfg is not None, f"fallback configuration failed validation: {errors}"
    return IntentResolution(dataclasses.replace(cfg, fallback=True), max_attempts, True, history)


# --------------------------------------------------------------------------
# warehouse closed-loop engine


@dataclass
class _RobotRuntime:
    state: RobotState
    executed: List[Cell]
    halt_s: float = 0.0
    stop_events: int = 0
    last_measured_gain_db: Optional[float] = None
    last_rate: float = 1.0
    land_time_s: float = 0.0
    pending_target: Optional[Cell] = None


class WarehouseSimulation:
    """Executes one warehouse run for one method and seed.

    Methods:
      stop_and_go -- no uplink; solo shortest routes with reactive halting
                     whenever a human forecast or another robot occupies the
                     next cell
      lorc_p      -- raw-frame uplink, map-predictive power, central replan
      lorc_sc     -- compact semantic uplink, reactive power (previous
                     measured gain), central replan
      lorc_sc_p   -- compact semantic uplink, map-predictive power, central
                     replan

    Replanning robots never execute a command before it has arrived: when
    the loop round trip outlasts the cell transition, the robot waits in
    place and the wait is logged as a stop event.
    """

    def __init__(
        self,
        world: GridWorld,
        robots: Sequence[RobotState],
        tracks: Sequence[HumanTrack],
        gain_map: PathGainMap,
        mcs_table: McsTable,
        cfg: OrchestratorConfig,
        budget: LoopBudget,
        method: str,
        seed: int,
        payload_table: Dict[str, int],
        max_sim_time_s: float = 3600.0,
    ):
        if method not in WAREHOUSE_METHODS:
            raise ValueError(f"method {method!r} not in {WAREHOUSE_METHODS}")
        if gain_map.width != world.width or gain_map.height != world.height:
            raise ValueError("gain map dimensions must match the world")
        self.world = world
        self.tracks = list(tracks)
        self.gain_map = gain_map
        self.table = mcs_table
        self.cfg = cfg
        self.budget = budget
        self.method = method
        self.seed = seed
        self.payload_table = dict(payload_table)
        self.max_sim_time_s = max_sim_time_s

        ids = sorted(r.id for r in robots)
        if len(cfg.ra.priority_weights) != len(ids):
            raise ValueError("priority weights must match the robot count")
        self._weight_of = {rid: w for rid, w in zip(ids, cfg.ra.priority_weights)}
        self.robots: Dict[int, _RobotRuntime] = {}
        n_frames = int(math.ceil(max_sim_time_s / world.frame_period_s)) + 8
        self._shadow: Dict[int, np.ndarray] = {}
        for r in robots:
            rt = _RobotRuntime(
                state=RobotState(r.id, tuple(r.cell), tuple(r.goal), "moving"),
                executed=[tuple(r.cell)],
            )
            self.robots[r.id] = rt
            self._shadow[r.id] = self._shadow_series(seed, r.id, n_frames)
            sel = select_mcs(self.table, cfg.ra.target_snr_db)
            rt.last_rate = self.table.entries[sel.index].rate_bps_per_hz
        self._tx_rng = {
            rid: np.random.default_rng([seed, rid, 101]) for rid in self.robots
        }
        self.rtt_samples: List[float] = []
        self._events: List[Tuple[float, int, int, str, Optional[Cell]]] = []
        self._event_seq = 0
        self._solo_paths: Dict[int, SpaceTimePath] = {}

    def _shadow_series(self, seed: int, rid: int, n: int) -> np.ndarray:
        rng = np.random.default_rng([seed, rid, 7])
        rho = self.gain_map.shadowing_rho
        sigma = self.gain_map.shadowing_sigma_db
        out = np.zeros(n)
        if sigma > 0:
            out[0] = rng.normal(0.0, sigma)
            innov = sigma * math.sqrt(1.0 - rho * rho)
            for i in range(1, n):
                out[i] = rho * out[i - 1] + rng.normal(0.0, innov)
        return out

    # -- helpers ----------------------------------------------------------

    def _frame(self, t: float) -> int:
        return int(t / self.world.frame_period_s + 1e-9)

    def _true_gain(self, rid: int, cell: Cell, t: float) -> float:
        return self.gain_map.gain_at(cell) + float(self._shadow[rid][self._frame(t)])

    def _push(self, t: float, rid: int, kind: str, target: Optional[Cell] = None) -> None:
        self._event_seq += 1
        heapq.heappush(self._events, (t, rid, self._event_seq, kind, target))

    def _active_ids(self) -> List[int]:
        return [rid for rid, rt in self.robots.items() if rt.state.status != "arrived"]

    def _bandwidth_fraction(self, rid: int) -> float:
        active = sorted(self._active_ids())
        if rid not in active:
            return 1.0
        weights = [self._weight_of[i] for i in active]
        total = sum(weights)
        if total <= 0:
            weights = [1.0] * len(active)
            total = float(len(active))
        ra = dataclasses.replace(
            self.cfg.ra, priority_weights=tuple(w / total for w in weights)
        )
        shares = allocate([self.robots[i].last_rate for i in active], ra)
        return shares[active.index(rid)]

    def _payload_bytes(self) -> int:
        key = "raw" if self.method == "lorc_p" else "semantic_feature"
        return int(self.payload_table[key])

    # -- the control loop -------------------------------------------------

    def _run_loop(self, rid: int, start_t: float, at_cell: Cell) -> float:
        """Simulate one sensing-uplink-orchestration loop started at
        ``start_t`` while the robot heads for ``at_cell``; returns the time
        the next command is ready."""
        rt = self.robots[rid]
        t = start_t
        attempts_budget = int(self.max_sim_time_s / self.world.frame_period_s)
        for _ in range(attempts_budget):
            if self.method in ("lorc_p", "lorc_sc_p"):
                gain_ref = self.gain_map.gain_at(at_cell)
            else:
                gain_ref = (
                    rt.last_measured_gain_db
                    if rt.last_measured_gain_db is not None
                    else self.gain_map.gain_at(at_cell)
                )
            power, _ = required_power(
                gain_ref, self.cfg.ra.target_snr_db, self.cfg.ra.noise_dbm, self.cfg.ra.max_power_dbm
            )
            est_snr = power + gain_ref - self.cfg.ra.noise_dbm
            true_gain = self._true_gain(rid, at_cell, t)
            true_snr = power + true_gain - self.cfg.ra.noise_dbm
            sel = select_mcs(self.table, est_snr)
            entry = self.table.entries[sel.index]
            rt.last_rate = entry.rate_bps_per_hz
            share = self._bandwidth_fraction(rid)
            eff_table = dataclasses.replace(self.table, bandwidth_hz=self.table.bandwidth_hz * share)
            result = simulate_transmission(
                self._payload_bytes(), entry, [true_snr], eff_table, self._tx_rng[rid],
                self.cfg.ra.max_retx,
            )
            rt.last_measured_gain_db = true_gain
            if result.success:
                ready = t + result.latency_s + self.budget.total_s
                self.rtt_samples.append(ready - start_t)
                return ready
            t += self.world.frame_period_s
        raise RuntimeError(f"robot {rid}: uplink never succeeded after {start_t:.1f} s")

    def _plan_next(self, rid: int, plan_time: float) -> Optional[Cell]:
        """Central replan at ``plan_time``; returns robot ``rid``'s next cell
        or None when planning is infeasible right now."""
        frame = self._frame(plan_time)
        active = sorted(self._active_ids())
        parked = {
            tuple(rt.state.goal)
            for i, rt in self.robots.items()
            if rt.state.status == "arrived" and i not in active
        }
        world = self.world
        if parked:
            world = GridWorld(
                world.width,
                world.height,
                world.cell_size_m,
                world.blocked | parked,
                world.frame_period_s,
                world.cell_traverse_s,
            )
        states = []
        for i in active:
            rt = self.robots[i]
            cell = rt.pending_target if rt.pending_target is not None else rt.state.cell
            states.append(RobotState(i, cell, rt.state.goal, "moving"))
        if len({tuple(s.cell) for s in states}) != len(states):
            return None
        pairs = []
        ratio = world.frame_period_s / world.cell_traverse_s
        for track in self.tracks:
            for cell, abs_frame in human_forecast(track, frame):
                rel = abs_frame - frame
                step = max(1, math.ceil(rel * ratio))
                pairs.append((cell, step))
        pp = self.cfg.pp
        if pp.priority_robot is not None and pp.priority_robot not in active:
            pp = dataclasses.replace(pp, priority_robot=None)
        try:
            paths = plan(world, states, pairs, pp)
        except PlanningError:
            return None
        for p in paths:
            if p.robot_id == rid:
                return p.at(1)
        return None

    # -- event handlers ---------------------------------------------------

    def _handle_replan_land(self, t: float, rid: int, target: Cell) -> None:
        rt = self.robots[rid]
        rt.state.cell = target
        rt.pending_target = None
        rt.executed.append(target)
        rt.land_time_s = t
        if target == tuple(rt.state.goal):
            rt.state.status = "arrived"

    def _start_transition(self, rid: int, t: float, target: Cell) -> None:
        """Commit the robot to its next step and kick the loop for the
        following command."""
        rt = self.robots[rid]
        land_t = t + self.world.cell_traverse_s
        rt.pending_target = target
        self._push(land_t, rid, "land", target)
        ready = self._run_loop(rid, t, target)
        self._push(max(ready, land_t), rid, "next_decide")

    def _handle_next_decide(self, t: float, rid: int) -> None:
        rt = self.robots[rid]
        if rt.state.status == "arrived":
            return
        # t is when both the transition has finished and the command arrived
        stall = t - rt.land_time_s
        if stall > 1e-9:
            rt.halt_s += stall
            rt.stop_events += 1
        self._handle_replan_decide_after_stall(t, rid)

    def _occupied_next(self, rid: int, target: Cell) -> bool:
        """True when ``target`` is the cell another active robot holds or is
        currently flying into.  Plans are recomputed per robot, so a stalled
        neighbour can invalidate the departure this robot's plan assumed;
        this interlock keeps two robots from ever sharing a cell."""
        for other_id, other in self.robots.items():
            if other_id == rid or other.state.status == "arrived":
                continue
            occupied = other.pending_target
            if occupied is None:
                occupied = tuple(other.state.cell)
            if tuple(occupied) == target:
                return True
        return False

    def _handle_replan_decide_after_stall(self, t: float, rid: int) -> None:
        rt = self.robots[rid]
        nxt = self._plan_next(rid, t)
        if nxt is not None and nxt != tuple(rt.state.cell) and self._occupied_next(rid, nxt):
            nxt = None
        if nxt is None:
            rt.halt_s += self.world.frame_period_s
            rt.stop_events += 1
            self._push(t + self.world.frame_period_s, rid, "retry_decide")
            return
        self._start_transition(rid, t, nxt)

    def _handle_sg_try(self, t: float, rid: int) -> None:
        rt = self.robots[rid]
        if rt.state.status == "arrived":
            return
        path = self._solo_paths[rid]
        idx = len(rt.executed) - 1
        nxt = path.at(idx + 1)
        frame = self._frame(t)
        blocked = False
        for track in self.tracks:
            if track.position_at(frame) == nxt:
                blocked = True
            for cell, _ in human_forecast(track, frame):
                if cell == nxt:
                    blocked = True
        for other_id, other in self.robots.items():
            if other_id != rid and other.state.status != "arrived" and tuple(other.state.cell) == nxt:
                blocked = True
        if blocked and nxt != tuple(rt.state.cell):
            rt.halt_s += self.world.cell_traverse_s
            rt.stop_events += 1
            self._push(t + self.world.cell_traverse_s, rid, "sg_try")
            return
        self._push(t + self.world.cell_traverse_s, rid, "sg_land", nxt)

    def _handle_sg_land(self, t: float, rid: int, target: Cell) -> None:
        rt = self.robots[rid]
        rt.state.cell = target
        rt.executed.append(target)
        rt.land_time_s = t
        if target == tuple(rt.state.goal):
            rt.state.status = "arrived"
        else:
            self._push(t, rid, "sg_try")

    # -- public API -------------------------------------------------------

    def decision_step(self) -> Optional[Tuple[float, int, str]]:
        """Process the next pending event; returns ``(time, robot, kind)`` or
        None when the run is complete."""
        while self._events:
            t, rid, _, kind, target = heapq.heappop(self._events)
            if t > self.max_sim_time_s:
                raise RuntimeError(f"run exceeded {self.max_sim_time_s} s of simulated time")
            if kind == "land":
                self._handle_replan_land(t, rid, target)
            elif kind == "next_decide":
                self._handle_next_decide(t, rid)
            elif kind in ("decide", "retry_decide"):
                self._handle_replan_decide_after_stall(t, rid)
            elif kind == "sg_try":
                self._handle_sg_try(t, rid)
            elif kind == "sg_land":
                self._handle_sg_land(t, rid, target)
            else:
                raise RuntimeError(f"unknown event {kind}")
            return t, rid, kind
        return None

    def run(self) -> KpiRecord:
        if self.method == "stop_and_go":
            for rid, rt in self.robots.items():
                self._solo_paths[rid] = low_level_search(self.world, rt.state)
                self._push(0.0, rid, "sg_try")
        else:
            for rid in sorted(self.robots):
                # initial synchronization: first command fetched before moving
                ready = self._run_loop(rid, 0.0, tuple(self.robots[rid].state.cell))
                self._push(ready, rid, "decide")
        while True:
            step = self.decision_step()
            if step is None:
                break
            if all(rt.state.status == "arrived" for rt in self.robots.values()):
                break
        unfinished = [rid for rid, rt in self.robots.items() if rt.state.status != "arrived"]
        if unfinished:
            raise RuntimeError(f"robots {unfinished} never arrived")
        paths = [SpaceTimePath(rid, tuple(rt.executed)) for rid, rt in self.robots.items()]
        stop_log = {rid: rt.halt_s for rid, rt in self.robots.items()}
        total = completion_time(paths, stop_log, self.world.cell_traverse_s)
        return KpiRecord(
            completion_time_s=total,
            stop_events=sum(rt.stop_events for rt in self.robots.values()),
            halt_s=sum(rt.halt_s for rt in self.robots.values()),
            rtt_samples_s=list(self.rtt_samples),
            per_robot_arrival_steps={rid: len(rt.executed) - 1 for rid, rt in self.robots.items()},
        )

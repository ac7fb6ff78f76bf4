"""Prioritized multi-robot path planning on the grid world.

Single-robot routes come from a space-time A* over ``(cell, step)`` nodes
with a wait action. Robot-robot conflicts are resolved one-sidedly: the
lower-priority robot receives a constraint around the conflict, widened by a
configurable time-gap window, and replans. Human forecasts enter as vertex
constraints for every robot.
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .world import Cell, GridWorld, RobotState, neighbors

OBJECTIVES = ("makespan", "safety_first")

# The exact-makespan joint refinement for two robots is only attempted on
# grids up to this many cells; above it the prioritized loop alone is used.
_REFINE_CELL_CAP = 200

_MAX_RESOLUTION_ROUNDS = 1000


class PlanningError(Exception):
    """Planning failed for a structural reason (non-convergence, bad input)."""


class PlanningInfeasible(PlanningError):
    """No path exists within the horizon; carries the constraints that bound
    the failed search."""

    def __init__(self, robot_id: int, constraints: Sequence["Constraint"], horizon: int):
        self.robot_id = robot_id
        self.constraints = tuple(constraints)
        self.horizon = horizon
        super().__init__(
            f"no feasible path for robot {robot_id} within horizon {horizon} "
            f"under {len(self.constraints)} constraints"
        )


@dataclass(frozen=True)
class Constraint:
    """Forbidden occupancy or transition for one robot.

    Kinds:
      vertex  -- may not occupy ``cell`` at step ``step_lo`` (== ``step_hi``)
      window  -- may not occupy ``cell`` at any step in [step_lo, step_hi]
      edge    -- may not move ``cell -> to_cell`` between ``step_lo`` and
                 ``step_lo + 1`` (edge constraints are single-step)
    """

    robot_id: int
    kind: str
    cell: Cell
    step_lo: int
    step_hi: int
    to_cell: Optional[Cell] = None

    def __post_init__(self):
        if self.kind not in ("vertex", "window", "edge"):
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if self.step_lo < 0 or self.step_hi < self.step_lo:
            raise ValueError("constraint steps must satisfy 0 <= step_lo <= step_hi")
        if self.kind == "edge" and (self.to_cell is None or self.step_lo != self.step_hi):
            raise ValueError("edge constraints need to_cell and a single step")

    @staticmethod
    def vertex(robot_id: int, cell: Cell, step: int) -> "Constraint":
        return Constraint(robot_id, "vertex", tuple(cell), step, step)

    @staticmethod
    def window(robot_id: int, cell: Cell, step_lo: int, step_hi: int) -> "Constraint":
        return Constraint(robot_id, "window", tuple(cell), step_lo, step_hi)

    @staticmethod
    def edge(robot_id: int, cell: Cell, to_cell: Cell, step: int) -> "Constraint":
        return Constraint(robot_id, "edge", tuple(cell), step, step, tuple(to_cell))


@dataclass(frozen=True)
class SpaceTimePath:
    """One cell per time step, starting at step 0."""

    robot_id: int
    cells: Tuple[Cell, ...]

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(tuple(c) for c in self.cells))
        if not self.cells:
            raise ValueError("path must contain at least the start cell")

    @property
    def arrival_step(self) -> int:
        return len(self.cells) - 1

    def at(self, step: int) -> Cell:
        """Position at ``step``, parked at the final cell afterwards."""
        return self.cells[min(step, len(self.cells) - 1)]

    def validate(self, world: GridWorld) -> None:
        for c in self.cells:
            if not world.passable(c):
                raise ValueError(f"path of robot {self.robot_id} uses blocked cell {c}")
        for a, b in zip(self.cells, self.cells[1:]):
            if abs(a[0] - b[0]) + abs(a[1] - b[1]) > 1:
                raise ValueError(f"path of robot {self.robot_id} jumps {a} -> {b}")


@dataclass(frozen=True)
class Conflict:
    kind: str  # "vertex" | "edge"
    step: int
    robot_a: int
    robot_b: int
    cell: Cell  # vertex cell, or robot_a's from-cell for an edge conflict
    to_cell: Optional[Cell] = None  # robot_a's to-cell for an edge conflict


@dataclass(frozen=True)
class PlanConfig:
    objective: str = "makespan"
    priority_robot: Optional[int] = None
    min_time_gap_at_conflict: int = 0

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective {self.objective!r} not in {OBJECTIVES}")
        if int(self.min_time_gap_at_conflict) != self.min_time_gap_at_conflict or self.min_time_gap_at_conflict < 0:
            raise ValueError("min_time_gap_at_conflict must be a nonnegative integer")


def default_horizon(world: GridWorld) -> int:
    return 4 * (world.width + world.height)


def _index_constraints(constraints: Iterable[Constraint]):
    """Split constraints into vertex-block and edge-block lookups."""
    cell_blocks: Dict[Cell, set] = {}
    edge_blocks = set()
    for c in constraints:
        if c.kind == "edge":
            edge_blocks.add((c.cell, c.to_cell, c.step_lo))
        else:
            steps = cell_blocks.setdefault(c.cell, set())
            steps.update(range(c.step_lo, c.step_hi + 1))
    return cell_blocks, edge_blocks


def _goal_distance_field(world: GridWorld, goal: Cell) -> Dict[Cell, int]:
    """Static BFS distance to ``goal``; admissible A* heuristic."""
    dist = {goal: 0}
    queue = deque([goal])
    while queue:
        cur = queue.popleft()
        for nxt in neighbors(world, cur):
            if nxt != cur and nxt not in dist:
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
    return dist


def low_level_search(
    world: GridWorld,
    robot: RobotState,
    constraints: Sequence[Constraint] = (),
    horizon: Optional[int] = None,
) -> SpaceTimePath:
    """Minimum-arrival-step route for one robot under the given constraints.

    Cost is the arrival step; the robot is considered parked at its goal
    afterwards, so the arrival step must clear every constraint on the goal
    cell. Expansion order (N, E, S, W, wait; FIFO among equal f-values) makes
    the result deterministic.
    """
    if horizon is None:
        horizon = default_horizon(world)
    start, goal = tuple(robot.cell), tuple(robot.goal)
    if not world.passable(start) or not world.passable(goal):
        raise PlanningError(f"robot {robot.id}: start {start} or goal {goal} not passable")
    own = [c for c in constraints if c.robot_id == robot.id]
    cell_blocks, edge_blocks = _index_constraints(own)
    goal_latest = max(cell_blocks.get(goal, {-1}), default=-1)
    if 0 in cell_blocks.get(start, ()):
        raise PlanningInfeasible(robot.id, own, horizon)
    hfield = _goal_distance_field(world, goal)
    if start not in hfield:
        raise PlanningInfeasible(robot.id, own, horizon)

    counter = itertools.count()
    heap = [(hfield[start], next(counter), 0, start)]
    parent: Dict[Tuple[Cell, int], Tuple[Cell, int]] = {}
    closed = set()
    while heap:
        _, _, step, cell = heapq.heappop(heap)
        if (cell, step) in closed:
            continue
        closed.add((cell, step))
        if cell == goal and step > goal_latest:
            cells = [cell]
            key = (cell, step)
            while key in parent:
                key = parent[key]
                cells.append(key[0])
            cells.reverse()
            return SpaceTimePath(robot.id, tuple(cells))
        nstep = step + 1
        if nstep > horizon:
            continue
        for nxt in neighbors(world, cell):
            if (nxt, nstep) in closed:
                continue
            if nstep in cell_blocks.get(nxt, ()):
                continue
            if (cell, nxt, step) in edge_blocks:
                continue
            h = hfield.get(nxt)
            if h is None or nstep + h > horizon:
                continue
            if (nxt, nstep) not in parent:
                parent[(nxt, nstep)] = (cell, step)
            heapq.heappush(heap, (nstep + h, next(counter), nstep, nxt))
    raise PlanningInfeasible(robot.id, own, horizon)


def detect_first_conflict(paths: Sequence[SpaceTimePath]) -> Optional[Conflict]:
    """Earliest conflict between any two goal-padded paths.

    At equal step a vertex conflict is reported before an edge conflict;
    among equal kinds the lowest path-index pair wins.
    """
    if len(paths) < 2:
        return None
    last = max(p.arrival_step for p in paths)
    n = len(paths)
    for t in range(last + 1):
        for i in range(n):
            for j in range(i + 1, n):
                if paths[i].at(t) == paths[j].at(t):
                    return Conflict("vertex", t, paths[i].robot_id, paths[j].robot_id, paths[i].at(t))
        if t == last:
            break
        for i in range(n):
            for j in range(i + 1, n):
                a0, a1 = paths[i].at(t), paths[i].at(t + 1)
                b0, b1 = paths[j].at(t), paths[j].at(t + 1)
                if a0 != a1 and a0 == b1 and a1 == b0:
                    return Conflict("edge", t, paths[i].robot_id, paths[j].robot_id, a0, a1)
    return None


def makespan(paths: Iterable[SpaceTimePath]) -> int:
    return max(p.arrival_step for p in paths)


def _human_base_constraints(
    world: GridWorld,
    robot_ids: Sequence[int],
    human_forecasts: Iterable[Tuple[Cell, int]],
    objective: str,
) -> Dict[int, List[Constraint]]:
    """Vertex constraints from human forecasts, for every robot.

    Under ``safety_first`` each forecast cell is widened to a +-1 step window
    and its free 4-neighbors are blocked at the forecast step.
    """
    pairs = [(tuple(c), int(s)) for c, s in human_forecasts]
    out: Dict[int, List[Constraint]] = {rid: [] for rid in robot_ids}
    for rid in robot_ids:
        for cell, step in pairs:
            if objective == "safety_first":
                out[rid].append(Constraint.window(rid, cell, max(0, step - 1), step + 1))
                x, y = cell
                for nxt in ((x, y + 1), (x + 1, y), (x, y - 1), (x - 1, y)):
                    if world.passable(nxt):
                        out[rid].append(Constraint.vertex(rid, nxt, step))
            else:
                out[rid].append(Constraint.vertex(rid, cell, step))
    return out


def _widen_conflict(conflict: Conflict, lower_id: int, gap: int) -> List[Constraint]:
    if conflict.kind == "vertex":
        lo = max(0, conflict.step - gap)
        return [Constraint.window(lower_id, conflict.cell, lo, conflict.step + gap)]
    if lower_id == conflict.robot_a:
        frm, to = conflict.cell, conflict.to_cell
    else:
        frm, to = conflict.to_cell, conflict.cell
    lo = max(0, conflict.step - gap)
    return [Constraint.edge(lower_id, frm, to, s) for s in range(lo, conflict.step + gap + 1)]


def _solve_ordering(
    world: GridWorld,
    robots: Dict[int, RobotState],
    order: Sequence[int],
    base: Dict[int, List[Constraint]],
    gap: int,
    horizon: int,
) -> Dict[int, SpaceTimePath]:
    rank = {rid: i for i, rid in enumerate(order)}
    cons = {rid: list(base[rid]) for rid in order}
    paths = {rid: low_level_search(world, robots[rid], cons[rid], horizon) for rid in order}
    for _ in range(_MAX_RESOLUTION_ROUNDS):
        conflict = detect_first_conflict([paths[rid] for rid in order])
        if conflict is None:
            return paths
        lower = conflict.robot_a if rank[conflict.robot_a] > rank[conflict.robot_b] else conflict.robot_b
        new = _widen_conflict(conflict, lower, gap)
        existing = set(cons[lower])
        fresh = [c for c in new if c not in existing]
        if not fresh:
            raise PlanningError(f"conflict {conflict} produced no new constraint")
        cons[lower].extend(fresh)
        paths[lower] = low_level_search(world, robots[lower], cons[lower], horizon)
    raise PlanningError("conflict resolution did not converge")


def _time_expanded_layers(
    world: GridWorld,
    start: Cell,
    goal: Cell,
    arrival: int,
    cell_blocks,
    edge_blocks,
):
    """Cells the lead robot may occupy at each step on some optimal route."""
    fwd = [set() for _ in range(arrival + 1)]
    fwd[0].add(start)
    for t in range(arrival):
        for cell in fwd[t]:
            for nxt in neighbors(world, cell):
                if (t + 1) in cell_blocks.get(nxt, ()):
                    continue
                if (cell, nxt, t) in edge_blocks:
                    continue
                fwd[t + 1].add(nxt)
    bwd = [set() for _ in range(arrival + 1)]
    bwd[arrival].add(goal)
    for t in range(arrival - 1, -1, -1):
        for cell in fwd[t]:
            for nxt in neighbors(world, cell):
                if nxt in bwd[t + 1] and (t + 1) not in cell_blocks.get(nxt, ()) and (cell, nxt, t) not in edge_blocks:
                    bwd[t].add(cell)
                    break
    return [sorted(fwd[t] & bwd[t]) for t in range(arrival + 1)]


def _joint_best_response(
    world: GridWorld,
    lead: RobotState,
    follow: RobotState,
    base: Dict[int, List[Constraint]],
    horizon: int,
) -> Optional[Tuple[int, SpaceTimePath, SpaceTimePath]]:
    """Exact best makespan when ``lead`` plans first and ``follow`` responds.

    The lead may take any of its optimal solo routes; a breadth-first search
    over the joint state space, with the lead restricted to those routes,
    finds the follower response minimizing the makespan. Only used for the
    two-robot makespan objective with a zero gap window.
    """
    lead_cb, lead_eb = _index_constraints(base[lead.id])
    fol_cb, fol_eb = _index_constraints(base[follow.id])
    try:
        solo = low_level_search(world, lead, base[lead.id], horizon)
    except PlanningInfeasible:
        return None
    t1 = solo.arrival_step
    layers = _time_expanded_layers(world, tuple(lead.cell), tuple(lead.goal), t1, lead_cb, lead_eb)
    goal1, goal2 = tuple(lead.goal), tuple(follow.goal)
    fol_goal_latest = max(fol_cb.get(goal2, {-1}), default=-1)

    start_state = (tuple(lead.cell), tuple(follow.cell))
    frontier = {start_state}
    parents: List[Dict[Tuple[Cell, Cell], Tuple[Cell, Cell]]] = [{start_state: None}]
    t = 0
    while t <= horizon:
        if t >= t1 and t > fol_goal_latest:
            for c1, c2 in sorted(frontier):
                if c1 == goal1 and c2 == goal2:
                    cells1, cells2 = [], []
                    state, step = (c1, c2), t
                    while state is not None:
                        cells1.append(state[0])
                        cells2.append(state[1])
                        state = parents[step][state]
                        step -= 1
                    cells1.reverse()
                    cells2.reverse()
                    cells1 = cells1[: t1 + 1]
                    while len(cells2) >= 2 and cells2[-1] == goal2 and cells2[-2] == goal2:
                        cells2.pop()
                    return t, SpaceTimePath(lead.id, tuple(cells1)), SpaceTimePath(follow.id, tuple(cells2))
        if t == horizon:
            break
        nxt_frontier = set()
        nxt_parents: Dict[Tuple[Cell, Cell], Tuple[Cell, Cell]] = {}
        lead_layer = set(layers[t + 1]) if t + 1 <= t1 else {goal1}
        for c1, c2 in sorted(frontier):
            if t + 1 <= t1:
                moves1 = [n for n in neighbors(world, c1) if n in lead_layer and (c1, n, t) not in lead_eb]
            else:
                moves1 = [goal1]
            moves2 = []
            for n in neighbors(world, c2):
                if (t + 1) in fol_cb.get(n, ()):
                    continue
                if (c2, n, t) in fol_eb:
                    continue
                moves2.append(n)
            for n1 in moves1:
                for n2 in moves2:
                    if n1 == n2 or (n1 == c2 and n2 == c1):
                        continue
                    state = (n1, n2)
                    if state not in nxt_parents:
                        nxt_parents[state] = (c1, c2)
                        nxt_frontier.add(state)
        if not nxt_frontier:
            return None
        frontier = nxt_frontier
        parents.append(nxt_parents)
        t += 1
    return None


def plan(
    world: GridWorld,
    robots: Sequence[RobotState],
    human_forecasts: Iterable[Tuple[Cell, int]],
    cfg: PlanConfig,
    horizon: Optional[int] = None,
) -> List[SpaceTimePath]:
    """Conflict-free paths for all robots.

    Priority order is ``cfg.priority_robot`` first, then ascending id; the
    lower-priority robot of each conflict is constrained and replans. Under
    the makespan objective the priority orderings are permuted (for up to 4
    robots, keeping a configured priority robot pinned first) and the
    ordering with the smallest makespan wins; for exactly two robots with a
    zero gap the exact joint refinement is used instead.
    """
    if horizon is None:
        horizon = default_horizon(world)
    ids = [r.id for r in robots]
    if len(set(ids)) != len(ids):
        raise PlanningError("duplicate robot ids")
    by_id = {r.id: r for r in robots}
    if cfg.priority_robot is not None and cfg.priority_robot not in by_id:
        raise PlanningError(f"priority robot {cfg.priority_robot} not present")
    starts = [tuple(r.cell) for r in robots]
    goals = [tuple(r.goal) for r in robots]
    if len(set(starts)) != len(starts) or len(set(goals)) != len(goals):
        raise PlanningError("robot starts and goals must be pairwise distinct")

    base = _human_base_constraints(world, ids, human_forecasts, cfg.objective)
    gap = cfg.min_time_gap_at_conflict

    if cfg.priority_robot is not None:
        order = [cfg.priority_robot] + sorted(i for i in ids if i != cfg.priority_robot)
    else:
        order = sorted(ids)

    if len(robots) == 1:
        path = low_level_search(world, robots[0], base[ids[0]], horizon)
        return [path]

    use_refinement = (
        cfg.objective == "makespan"
        and len(robots) == 2
        and gap == 0
        and cfg.priority_robot is None
        and world.width * world.height <= _REFINE_CELL_CAP
    )
    if use_refinement:
        best = None
        for lead_id, follow_id in (order, list(reversed(order))):
            res = _joint_best_response(world, by_id[lead_id], by_id[follow_id], base, horizon)
            if res is not None and (best is None or res[0] < best[0]):
                best = res
        if best is None:
            raise PlanningInfeasible(order[-1], base[order[-1]], horizon)
        solved = {best[1].robot_id: best[1], best[2].robot_id: best[2]}
        return [solved[r.id] for r in robots]

    if cfg.objective == "makespan" and len(robots) <= 4:
        if cfg.priority_robot is not None:
            rest = [i for i in order if i != cfg.priority_robot]
            orderings = [[cfg.priority_robot] + list(p) for p in itertools.permutations(rest)]
        else:
            orderings = [list(p) for p in itertools.permutations(order)]
    else:
        orderings = [order]

    best_paths = None
    best_span = None
    failure: Optional[PlanningInfeasible] = None
    for cand in orderings:
        try:
            paths = _solve_ordering(world, by_id, cand, base, gap, horizon)
        except PlanningInfeasible as exc:
            failure = exc
            continue
        span = makespan(paths.values())
        if best_span is None or span < best_span:
            best_span = span
            best_paths = paths
    if best_paths is None:
        assert failure is not None
        raise failure
    return [best_paths[r.id] for r in robots]

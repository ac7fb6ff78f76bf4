"""Grid world primitives: cells, robots, scripted human tracks, and the frame clock.

The world is a rectangular grid of square cells. Coordinates are ``(x, y)``
with ``x`` growing east and ``y`` growing north. Time advances in fixed
frames; robots traverse one cell per ``cell_traverse_s`` seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

Cell = Tuple[int, int]

ROBOT_STATUSES = ("moving", "waiting", "arrived", "stopped")

# Neighbor offsets in deterministic order: north, east, south, west.
_NESW = ((0, 1), (1, 0), (0, -1), (-1, 0))


@dataclass(frozen=True)
class GridWorld:
    """Immutable occupancy grid.

    ``blocked`` holds cells that can never be entered (racks, walls).
    """

    width: int
    height: int
    cell_size_m: float = 2.0
    blocked: frozenset = field(default_factory=frozenset)
    frame_period_s: float = 0.5
    cell_traverse_s: float = 1.4

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be at least 1x1")
        if self.cell_size_m <= 0:
            raise ValueError("cell_size_m must be positive")
        if self.frame_period_s <= 0 or self.cell_traverse_s <= 0:
            raise ValueError("frame_period_s and cell_traverse_s must be positive")
        object.__setattr__(self, "blocked", frozenset(tuple(c) for c in self.blocked))
        for c in self.blocked:
            if not self.in_bounds(c):
                raise ValueError(f"blocked cell {c} outside {self.width}x{self.height} grid")

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def passable(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and cell not in self.blocked


def neighbors(world: GridWorld, cell: Cell) -> List[Cell]:
    """In-bounds, unblocked moves from ``cell`` in N, E, S, W order, then the
    wait move (the cell itself) last."""
    if not world.passable(cell):
        raise ValueError(f"cell {cell} is blocked or out of bounds")
    x, y = cell
    out = []
    for dx, dy in _NESW:
        nxt = (x + dx, y + dy)
        if world.passable(nxt):
            out.append(nxt)
    out.append(cell)
    return out


def cell_transition_time(world: GridWorld) -> float:
    """Seconds a robot needs to move to an adjacent cell (also the cost of a
    commanded wait step)."""
    return world.cell_traverse_s


@dataclass
class RobotState:
    id: int
    cell: Cell
    goal: Cell
    status: str = "moving"

    def __post_init__(self):
        self.cell = tuple(self.cell)
        self.goal = tuple(self.goal)
        if self.status not in ROBOT_STATUSES:
            raise ValueError(f"status {self.status!r} not in {ROBOT_STATUSES}")


@dataclass(frozen=True)
class Clock:
    """Frame counter; wall time is always ``step * frame_period_s``."""

    frame_period_s: float = 0.5
    step: int = 0

    @property
    def sim_time_s(self) -> float:
        return self.step * self.frame_period_s

    def advanced(self, steps: int = 1) -> "Clock":
        return Clock(self.frame_period_s, self.step + steps)


@dataclass(frozen=True)
class HumanTrack:
    """Scripted human trajectory, one waypoint per frame.

    Consecutive waypoints must be identical (standing) or 4-adjacent.
    Past the last waypoint the human is assumed stationary.
    """

    waypoints: Tuple[Cell, ...]
    horizon_frames: int = 3

    def __post_init__(self):
        wps = tuple(tuple(w) for w in self.waypoints)
        object.__setattr__(self, "waypoints", wps)
        if not wps:
            raise ValueError("track needs at least one waypoint")
        if self.horizon_frames < 1:
            raise ValueError("horizon_frames must be >= 1")
        for a, b in zip(wps, wps[1:]):
            if abs(a[0] - b[0]) + abs(a[1] - b[1]) > 1:
                raise ValueError(f"waypoints {a} -> {b} are not adjacent or identical")

    def position_at(self, step: int) -> Cell:
        if step < 0:
            raise ValueError("step must be nonnegative")
        if step >= len(self.waypoints):
            return self.waypoints[-1]
        return self.waypoints[step]


def human_forecast(
    track: HumanTrack,
    step: int,
    *,
    error_prob: float = 0.0,
    rng: "np.random.Generator | None" = None,
    world: "GridWorld | None" = None,
) -> List[Tuple[Cell, int]]:
    """Forecast cells for the next ``track.horizon_frames`` frames after ``step``.

    Returns ``[(cell, step+1), ..., (cell, step+horizon)]``; the track is
    extrapolated as stationary past its end. ``error_prob`` optionally
    perturbs each forecast cell to a random free 4-neighbor, for robustness
    experiments (requires ``rng`` and ``world``).
    """
    out = []
    for i in range(1, track.horizon_frames + 1):
        cell = track.position_at(step + i)
        if error_prob > 0.0:
            if rng is None or world is None:
                raise ValueError("error injection needs rng and world")
            if rng.random() < error_prob:
                options = [c for c in neighbors(world, cell) if c != cell]
                if options:
                    cell = options[rng.integers(len(options))]
        out.append((cell, step + i))
    return out


def load_grid(text: str) -> GridWorld:
    """Parse the plain-text map format.

    First line: ``width height cell_size_m``. Then ``height`` rows of ``.``
    (free) and ``#`` (blocked), the first row being the north edge
    (``y = height - 1``).
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty map")
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError("header must be 'width height cell_size_m'")
    width, height = int(head[0]), int(head[1])
    cell_size = float(head[2])
    rows = lines[1:]
    if len(rows) != height:
        raise ValueError(f"expected {height} map rows, got {len(rows)}")
    blocked = set()
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"row {r} has length {len(row)}, expected {width}")
        y = height - 1 - r
        for x, ch in enumerate(row):
            if ch == "#":
                blocked.add((x, y))
            elif ch != ".":
                raise ValueError(f"unknown map character {ch!r} at row {r}")
    return GridWorld(width, height, cell_size, frozenset(blocked))


def dump_grid(world: GridWorld) -> str:
    """Inverse of :func:`load_grid`."""
    lines = [f"{world.width} {world.height} {world.cell_size_m:g}"]
    for r in range(world.height):
        y = world.height - 1 - r
        lines.append("".join("#" if (x, y) in world.blocked else "." for x in range(world.width)))
    return "\n".join(lines) + "\n"

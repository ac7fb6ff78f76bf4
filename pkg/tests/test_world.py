"""Grid, robot-state, human-track, and map-format behavior."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from r2xsim.world import (
    Clock,
    GridWorld,
    HumanTrack,
    RobotState,
    cell_transition_time,
    dump_grid,
    human_forecast,
    load_grid,
    neighbors,
)


def open_world(w=3, h=3, **kw):
    return GridWorld(w, h, **kw)


class TestGridWorld:
    def test_bounds_and_passable(self):
        world = GridWorld(3, 2, blocked=frozenset({(1, 0)}))
        assert world.in_bounds((0, 0)) and world.in_bounds((2, 1))
        assert not world.in_bounds((3, 0))
        assert not world.in_bounds((0, -1))
        assert world.passable((0, 0))
        assert not world.passable((1, 0))
        assert not world.passable((5, 5))

    def test_blocked_coerced_to_tuples(self):
        world = GridWorld(2, 2, blocked=[[0, 1]])
        assert (0, 1) in world.blocked

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(width=0, height=3),
            dict(width=3, height=0),
            dict(width=2, height=2, cell_size_m=0.0),
            dict(width=2, height=2, frame_period_s=0.0),
            dict(width=2, height=2, cell_traverse_s=-1.0),
            dict(width=2, height=2, blocked=frozenset({(2, 0)})),
        ],
    )
    def test_invalid_construction(self, kwargs):
        with pytest.raises(ValueError):
            GridWorld(**kwargs)

    def test_transition_time(self):
        assert cell_transition_time(GridWorld(2, 2, cell_traverse_s=0.7)) == 0.7


class TestNeighbors:
    def test_order_is_nesw_then_wait(self):
        world = open_world()
        assert neighbors(world, (1, 1)) == [(1, 2), (2, 1), (1, 0), (0, 1), (1, 1)]

    def test_corner(self):
        world = open_world()
        assert neighbors(world, (0, 0)) == [(0, 1), (1, 0), (0, 0)]

    def test_blocked_excluded(self):
        world = GridWorld(3, 3, blocked=frozenset({(1, 0)}))
        assert neighbors(world, (0, 0)) == [(0, 1), (0, 0)]

    def test_from_blocked_cell_raises(self):
        world = GridWorld(3, 3, blocked=frozenset({(1, 1)}))
        with pytest.raises(ValueError):
            neighbors(world, (1, 1))


class TestRobotState:
    def test_coercion(self):
        r = RobotState(1, [0, 0], [2, 2])
        assert r.cell == (0, 0) and r.goal == (2, 2)
        assert r.status == "moving"

    def test_bad_status(self):
        with pytest.raises(ValueError):
            RobotState(1, (0, 0), (1, 1), status="parked")


class TestClock:
    def test_time_and_advance(self):
        c = Clock(0.25)
        assert c.sim_time_s == 0.0
        c2 = c.advanced(3)
        assert c2.step == 3 and c2.sim_time_s == 0.75
        assert c.step == 0  # immutable


class TestHumanTrack:
    def test_position_clamps_past_end(self):
        t = HumanTrack([(0, 0), (0, 1), (1, 1)])
        assert t.position_at(0) == (0, 0)
        assert t.position_at(2) == (1, 1)
        assert t.position_at(99) == (1, 1)

    def test_negative_step_raises(self):
        with pytest.raises(ValueError):
            HumanTrack([(0, 0)]).position_at(-1)

    def test_standing_waypoints_allowed(self):
        t = HumanTrack([(2, 2), (2, 2), (2, 3)])
        assert t.position_at(1) == (2, 2)

    def test_nonadjacent_waypoints_rejected(self):
        with pytest.raises(ValueError):
            HumanTrack([(0, 0), (1, 1)])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            HumanTrack([])

    def test_bad_horizon_rejected(self):
        with pytest.raises(ValueError):
            HumanTrack([(0, 0)], horizon_frames=0)


class TestHumanForecast:
    def test_plain_forecast_steps(self):
        t = HumanTrack([(0, 0), (1, 0), (1, 1), (1, 2)], horizon_frames=3)
        assert human_forecast(t, 0) == [((1, 0), 1), ((1, 1), 2), ((1, 2), 3)]

    def test_extrapolates_stationary(self):
        t = HumanTrack([(0, 0), (1, 0)], horizon_frames=2)
        assert human_forecast(t, 5) == [((1, 0), 6), ((1, 0), 7)]

    def test_error_injection_moves_to_free_neighbor(self):
        world = open_world()
        t = HumanTrack([(1, 1)], horizon_frames=4)
        rng = np.random.default_rng(0)
        out = human_forecast(t, 0, error_prob=1.0, rng=rng, world=world)
        cells = [c for c, _ in out]
        assert all(c != (1, 1) for c in cells)
        legal = {(1, 2), (2, 1), (1, 0), (0, 1)}
        assert all(c in legal for c in cells)

    def test_error_injection_with_no_options_keeps_cell(self):
        world = GridWorld(1, 1)
        t = HumanTrack([(0, 0)], horizon_frames=2)
        rng = np.random.default_rng(0)
        out = human_forecast(t, 0, error_prob=1.0, rng=rng, world=world)
        assert [c for c, _ in out] == [(0, 0), (0, 0)]

    def test_error_injection_requires_rng_and_world(self):
        t = HumanTrack([(0, 0)])
        with pytest.raises(ValueError):
            human_forecast(t, 0, error_prob=0.5)


class TestGridFormat:
    MAP = "3 2 1.0\n#..\n..#\n"

    def test_orientation_first_row_is_north(self):
        world = load_grid(self.MAP)
        assert world.width == 3 and world.height == 2
        assert world.cell_size_m == 1.0
        assert world.blocked == frozenset({(0, 1), (2, 0)})

    def test_dump_round_trip(self):
        world = load_grid(self.MAP)
        again = load_grid(dump_grid(world))
        assert again.width == world.width
        assert again.height == world.height
        assert again.blocked == world.blocked
        assert again.cell_size_m == world.cell_size_m

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "3 2\n...\n...\n",
            "3 2 1.0\n...\n",
            "3 2 1.0\n..\n...\n",
            "3 2 1.0\n...\n..x\n",
        ],
    )
    def test_bad_maps_rejected(self, text):
        with pytest.raises(ValueError):
            load_grid(text)

    @given(
        width=st.integers(1, 6),
        height=st.integers(1, 6),
        cell_size=st.sampled_from([0.5, 1.0, 2.0, 2.5]),
        seed=st.integers(0, 10_000),
    )
    @settings(max_examples=60, deadline=None)
    def test_round_trip_random_grids(self, width, height, cell_size, seed):
        rng = np.random.default_rng(seed)
        blocked = frozenset(
            (x, y)
            for x in range(width)
            for y in range(height)
            if rng.random() < 0.3
        )
        world = GridWorld(width, height, cell_size, blocked)
        again = load_grid(dump_grid(world))
        assert (again.width, again.height) == (width, height)
        assert again.cell_size_m == cell_size
        assert again.blocked == blocked

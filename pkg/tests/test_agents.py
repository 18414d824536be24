import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slimevote import agents
from slimevote.agents import (
    AgentParams, Particle, WorldState, adaptation_due, agent_stage, apply_survival, motor_stage,
    neighbour_count, run_hold_phase, scheduler_step, sensory_stage, try_divide,
)
from slimevote.encoding import EncodingParams, build_polyline, random_election, seed_population
from slimevote.errors import ParameterError
from slimevote.lattice import EMPTY

from conftest import brute_count, make_world


def oracle_heading(f, fl, fr, heading, ra):
    """Reference decision table with the deterministic tie-break toward the stronger side."""
    if f > fl and f > fr:
        return heading
    if f < fl and f < fr:
        if fl == fr:
            return None  # coin flip
        return (heading + ra) % 360 if fl > fr else (heading - ra) % 360
    if fl < fr:
        return (heading - ra) % 360
    if fr < fl:
        return (heading + ra) % 360
    return heading


def sensor_world(f, fl, fr, heading=90.0):
    """Particle at cell (20, 20); heading 90 puts F at +y, FL (+SA) at -x, FR at +x."""
    world = make_world([(20, 20)], width=41, height=41, heading=heading)
    v = world.field.values
    v[25, 20], v[20, 15], v[20, 25] = f, fl, fr
    return world


class TestSensoryStage:
    def test_forward_max_continues(self, params):
        assert sensory_stage(sensor_world(5, 1, 1), 0, params) == 90.0

    def test_uniform_field_keeps_heading(self, params):
        assert sensory_stage(sensor_world(2, 2, 2), 0, params) == 90.0

    def test_rotates_toward_stronger_side(self, params):
        assert sensory_stage(sensor_world(1, 4, 2), 0, params) == 135.0

    @pytest.mark.parametrize("values", list(itertools.permutations([1.0, 2.0, 3.0]))
                             + [(1, 1, 2), (1, 2, 1), (2, 1, 1), (2, 2, 1), (2, 1, 2), (1, 2, 2)])
    def test_matches_decision_table(self, params, values):
        got = sensory_stage(sensor_world(*values), 0, params)
        expected = oracle_heading(*values, 90.0, params.ra)
        if expected is None:
            assert got in (135.0, 45.0)
        else:
            assert got == expected

    def test_classic_rule_flips_a_fair_coin(self):
        p = AgentParams(turn_rule="classic")
        world = sensor_world(1, 4, 2)
        got = [sensory_stage(world, 0, p) for _ in range(400)]
        assert set(got) == {45.0, 135.0}
        assert 150 < got.count(45.0) < 250

    def test_heading_is_not_stored(self, params):
        world = sensor_world(1, 4, 2)
        sensory_stage(world, 0, params)
        assert world.heading[0] == 90.0

    def test_negative_turn_wraps_into_range(self, params):
        world = make_world([(20, 20)], width=41, height=41, heading=0.0)
        world.field.values[20 - 5, 20] = 3.0  # FR at heading - 90
        assert sensory_stage(world, 0, params) == 315.0

    @given(vals=st.tuples(*[st.sampled_from([0.0, 1.0, 2.0])] * 3), heading=st.floats(0, 359.999))
    def test_changes_heading_only_by_ra(self, vals, heading):
        p = AgentParams()
        world = make_world([(20, 20)], width=41, height=41, heading=heading)
        world.field.values[:] = np.random.default_rng(int(heading * 7)).choice(vals, size=(41, 41))
        new = sensory_stage(world, 0, p)
        diff = (new - heading) % 360
        assert min(diff, 360 - diff) == pytest.approx(0, abs=1e-9) or \
            min(abs(diff - 45), abs(diff - 315)) == pytest.approx(0, abs=1e-9)
        assert 0 <= new < 360


class TestMotorStage:
    def test_free_move_deposits_at_new_cell(self, params):
        world = WorldState.empty(30, 30, 0)
        world.add(Particle(10.2, 20.0, 0.0))
        assert motor_stage(world, 0, params)
        assert (world.px[0], world.py[0]) == pytest.approx((11.2, 20.0))
        assert world.field.values[20, 11] == 5.0 and world.field.total() == 5.0
        assert world.occupancy.cells[20, 11] == 0 and world.occupancy.cells[20, 10] == EMPTY
        assert world.moved[0]

    def test_blocked_move_is_abandoned(self, params):
        world = make_world([(5, 5), (6, 5)], heading=0.0, moved=True)
        assert not motor_stage(world, 0, params)
        assert (world.px[0], world.py[0]) == (5.5, 5.5)
        assert world.field.total() == 0
        assert not world.moved[0]
        assert 0 <= world.heading[0] < 360

    def test_blocked_move_picks_uniform_heading(self, params):
        headings = []
        for seed in range(300):
            world = make_world([(5, 5), (6, 5)], seed=seed, heading=0.0)
            motor_stage(world, 0, params)
            headings.append(world.heading[0])
        counts, _ = np.histogram(headings, bins=4, range=(0, 360))
        assert counts.min() > 40

    @pytest.mark.parametrize("y, heading", [(0.5, 270.0), (11.5, 90.0)])
    def test_vertical_edge_blocks(self, params, y, heading):
        world = WorldState.empty(12, 12, 0)
        world.add(Particle(4.5, y, heading))
        assert not motor_stage(world, 0, params)
        assert world.py[0] == y and world.field.total() == 0

    def test_horizontal_wrap(self, params):
        world = WorldState.empty(12, 12, 0)
        world.add(Particle(11.5, 3.5, 0.0))
        assert motor_stage(world, 0, params)
        assert world.px[0] == pytest.approx(0.5)
        assert world.occupancy.cells[3, 0] == 0
        world.check_invariants()

    def test_sub_cell_move_keeps_own_cell(self, params):
        world = WorldState.empty(12, 12, 0)
        world.add(Particle(4.1, 4.5, 45.0))
        assert motor_stage(world, 0, params)
        world.check_invariants()

    def test_hold_deposits_in_place(self, params):
        world = make_world([(5, 5)], heading=0.0)
        assert motor_stage(world, 0, params, hold=True)
        assert (world.px[0], world.py[0]) == (5.5, 5.5)
        assert world.field.values[5, 5] == 5.0 and world.moved[0]


def block(cx, cy, half, skip=()):
    return [(cx + dx, cy + dy) for dy in range(-half, half + 1) for dx in range(-half, half + 1)
            if (dx, dy) != (0, 0) and (cx + dx, cy + dy) not in skip]


class TestDivision:
    def test_spawns_into_the_only_free_cell(self, params):
        others = block(6, 6, 1, skip={(7, 7)})
        world = make_world([(6, 6)] + others, moved=True)
        assert neighbour_count(world, 0, 9, False) == 7
        assert try_divide(world, 0, params) == 1
        assert world.n == 9
        assert world.occupancy.cells[7, 7] == 8
        assert (world.px[8], world.py[8]) == (7.5, 7.5)
        world.check_invariants()

    def test_five_neighbours_spawn_into_a_free_3x3_cell(self, params):
        others = [(5, 5), (6, 5), (7, 5), (5, 6), (7, 6)]
        free = {(5, 7), (6, 7), (7, 7)}
        seen = set()
        for seed in range(40):
            world = make_world([(6, 6)] + others, seed=seed, moved=True)
            assert try_divide(world, 0, params) == 1
            seen.add(tuple(world.cells()[-1]))
        assert seen == free

    def test_no_neighbours_no_spawn(self, params):
        world = make_world([(6, 6)], moved=True)
        assert neighbour_count(world, 0, 9, False) == brute_count([], 6, 6, 9, 12, 12) == 0
        assert try_divide(world, 0, params) == 0

    def test_full_3x3_no_spawn(self, params):
        world = make_world([(6, 6)] + block(6, 6, 1), moved=True)
        assert try_divide(world, 0, params) == 0

    def test_requires_previous_move(self, params):
        world = make_world([(6, 6), (8, 8)], moved=False)
        assert try_divide(world, 0, params) == 0

    @pytest.mark.parametrize("k, spawns", [(10, 1), (11, 0)])
    def test_upper_bound_inclusive(self, params, k, spawns):
        ring = [c for c in block(10, 10, 4) if max(abs(c[0] - 10), abs(c[1] - 10)) >= 3][:k]
        world = make_world([(10, 10)] + ring, width=21, height=21, moved=True)
        assert neighbour_count(world, 0, 9, False) == k
        assert try_divide(world, 0, params) == spawns

    def test_spawn_respects_vertical_edge(self, params):
        for seed in range(20):
            world = make_world([(3, 0), (4, 0)], seed=seed, moved=True)
            try_divide(world, 0, params)
            world.check_invariants()
            assert (world.rows() >= 0).all()


class TestSurvival:
    def test_isolated_survives(self, params):
        world = make_world([(6, 6)])
        assert apply_survival(world, 0, params)
        assert world.n == 1

    def test_packed_block_with_self_excluded_survives(self):
        p = AgentParams(survival_count_self=False)
        world = make_world([(6, 6)] + block(6, 6, 2))
        assert neighbour_count(world, 0, 5, False) == 24
        assert apply_survival(world, 0, p)

    def test_packed_block_with_self_counted_dies(self, params):
        world = make_world([(6, 6)] + block(6, 6, 2))
        assert neighbour_count(world, 0, 5, True) == 25
        assert not apply_survival(world, 0, params)
        assert world.n == 24
        assert world.occupancy.cells[6, 6] == EMPTY
        world.check_invariants()

    def test_twenty_four_counted_survives(self, params):
        world = make_world([(6, 6)] + block(6, 6, 2, skip={(4, 4)}))
        assert neighbour_count(world, 0, 5, True) == 24
        assert apply_survival(world, 0, params)


@settings(max_examples=60)
@given(
    cells=st.sets(st.tuples(st.integers(0, 11), st.integers(0, 11)), min_size=1, max_size=80),
    window=st.sampled_from([3, 5, 9]),
    data=st.data(),
)
def test_neighbour_count_matches_brute_force(cells, window, data):
    cells = sorted(cells)
    world = make_world(cells)
    i = data.draw(st.integers(0, len(cells) - 1))
    cx, cy = cells[i]
    expected = brute_count(cells, cx, cy, window, 12, 12)
    assert neighbour_count(world, i, window, True) == expected
    assert neighbour_count(world, i, window, False) == expected - 1


def seeded_band(seed, n=9, population=3000):
    rng = np.random.default_rng(seed)
    enc = EncodingParams(population=population)
    poly = build_polyline(random_election(n, rng), enc)
    world = WorldState.from_particles(seed_population(poly, population, rng),
                                      enc.arena_width, enc.arena_height, rng)
    return world, poly


class TestScheduler:
    def test_empty_world_only_diffuses(self, params):
        world = WorldState.empty(10, 10, 0)
        world.field.values[5, 5] = 9.0
        scheduler_step(world, params)
        assert world.step == 1 and world.n == 0
        assert world.field.values[4:7, 4:7] == pytest.approx(np.full((3, 3), 0.9))

    def test_deterministic(self, params):
        a, _ = seeded_band(7, population=800)
        b, _ = seeded_band(7, population=800)
        for _ in range(30):
            scheduler_step(a, params)
            scheduler_step(b, params)
            assert a.n == b.n
            assert np.array_equal(a.px[: a.n], b.px[: b.n]) and np.array_equal(a.py[: a.n], b.py[: b.n])
        assert np.array_equal(a.field.values, b.field.values)

    def test_different_seeds_diverge(self, params):
        a, _ = seeded_band(1, population=500)
        b, _ = seeded_band(2, population=500)
        for _ in range(5):
            scheduler_step(a, params)
            scheduler_step(b, params)
        assert not np.array_equal(a.field.values, b.field.values)

    @pytest.mark.parametrize("seed", range(10))
    def test_invariants_hold_every_step(self, params, seed):
        world, _ = seeded_band(seed, population=1000)
        for _ in range(40):
            scheduler_step(world, params)
            world.check_invariants()

    def test_deposit_accounting_exact(self, params):
        world, _ = seeded_band(3, population=1500)
        for _ in range(10):
            before = world.field.total()
            moves = agent_stage(world, params)
            assert moves > 0
            assert world.field.total() - before == pytest.approx(params.deposit * moves, rel=1e-12)
            scheduler_step(world, params)

    def test_adaptation_cadence(self, params, monkeypatch):
        calls = []
        monkeypatch.setattr(agents, "adaptation_stage", lambda w, p: calls.append(w.step))
        world, _ = seeded_band(0, population=100)
        for _ in range(9):
            scheduler_step(world, params)
        assert calls == [0, 2, 4, 6, 8]
        assert [s for s in range(9) if adaptation_due(s, AgentParams(adapt_every=3))] == [0, 3, 6]


class TestHoldPhase:
    def test_zero_steps_is_identity(self, params):
        world, poly = seeded_band(0, population=300)
        px, field = world.px.copy(), world.field.values.copy()
        run_hold_phase(world, poly.pixels, 0, params)
        assert world.step == 0
        assert np.array_equal(world.px, px) and np.array_equal(world.field.values, field)

    def test_rejects_negative(self, params):
        world, poly = seeded_band(0, population=10)
        with pytest.raises(ParameterError):
            run_hold_phase(world, poly.pixels, -1, params)

    def test_gap_filling_grows_population(self, params):
        world, poly = seeded_band(11)
        run_hold_phase(world, poly.pixels, 20, params)
        assert world.step == 20
        assert world.n >= 3000
        world.check_invariants()
        # seeds and children both sit on cell centres; any real move would leave them
        assert (world.px[: world.n] % 1 == 0.5).all() and (world.py[: world.n] % 1 == 0.5).all()


class TestWorldState:
    def test_rejects_double_occupancy(self):
        world = make_world([(2, 2)])
        with pytest.raises(ParameterError):
            world.add(Particle(2.9, 2.1, 0.0))

    def test_rejects_out_of_lattice(self):
        with pytest.raises(ParameterError):
            WorldState.empty(5, 5, 0).add(Particle(1.0, 5.0, 0.0))

    def test_heading_normalised(self):
        world = WorldState.empty(5, 5, 0)
        world.add(Particle(1.0, 1.0, -90.0))
        assert world.particle(0).heading == 270.0

    def test_so_minimum(self):
        with pytest.raises(ParameterError):
            AgentParams(so=2.0)


@settings(max_examples=80)
@given(
    cells=st.sets(st.tuples(st.integers(0, 7), st.integers(0, 7)), min_size=1, max_size=64),
    lo=st.integers(0, 3), hi=st.integers(0, 25), count_self=st.booleans(), data=st.data(),
)
def test_survival_matches_brute_force(cells, lo, hi, count_self, data):
    cells = sorted(cells)
    i = data.draw(st.integers(0, len(cells) - 1))
    cx, cy = cells[i]
    c = brute_count(cells, cx, cy, 5, 8, 8) - (0 if count_self else 1)
    p = AgentParams(survival_min=lo, survival_max=hi, survival_count_self=count_self)
    world = make_world(cells, width=8, height=8)
    assert apply_survival(world, i, p) == (lo <= c <= hi)
    world.check_invariants()

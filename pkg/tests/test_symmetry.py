"""Image orbits, match lookup, and the deposit-emitting rule pass."""

from __future__ import annotations

import math

import numpy as np
import pytest

from switchsim.dynamics import Trajectory, build_visit_index
from switchsim.symmetry import (
    FOURFOLD_RULE,
    MIRROR_Y_RULE,
    RuleConfig,
    RuleDescriptor,
    SymmetryKind,
    apply_rule,
    causality_guard,
    find_match,
    orbit,
)
from switchsim.rng import Rng


def make_traj(particle, node_list):
    return Trajectory(particle=particle, nodes=np.array(node_list, dtype=np.int64))


class TestOrbit:
    def test_mirror_y_generic(self):
        assert orbit((3, 2), SymmetryKind.MIRROR_Y) == ((-3, 2),)

    def test_mirror_y_axis_node_has_empty_orbit(self):
        assert orbit((0, 5), SymmetryKind.MIRROR_Y) == ()

    def test_fourfold_generic(self):
        assert orbit((3, 2), SymmetryKind.FOURFOLD) == ((-3, 2), (3, -2), (-3, -2))

    def test_fourfold_on_x_axis_collapses(self):
        # (i,0): (-i,0) appears twice among the images, (i,-0)=(i,0) is self
        assert orbit((4, 0), SymmetryKind.FOURFOLD) == ((-4, 0),)

    def test_fourfold_on_y_axis_collapses(self):
        assert orbit((0, 4), SymmetryKind.FOURFOLD) == ((0, -4),)

    def test_origin_empty_both_kinds(self):
        assert orbit((0, 0), SymmetryKind.MIRROR_Y) == ()
        assert orbit((0, 0), SymmetryKind.FOURFOLD) == ()


def naive_find_match(trajectories, particle, tick, kind):
    """Reference matcher: direct scan over every trajectory, no index."""
    node = None
    for traj in trajectories:
        if traj.particle == particle:
            node = traj.node_at(tick)
    images = orbit(node, kind)
    if not images:
        return ()
    events = []
    for image in images:
        best = None
        for traj in trajectories:
            for t in range(tick, len(traj)):
                if (t, traj.particle) == (tick, particle):
                    continue
                if traj.node_at(t) == image:
                    cand = (t, traj.particle)
                    if best is None or cand < best:
                        best = cand
                    break
        if best is None:
            return ()
        events.append((particle, tick, best[1], best[0], image))
    return tuple(events)


class TestFindMatch:
    def test_constructed_mirror_pair(self):
        a = make_traj(0, [[2, 1], [3, 1]])
        b = make_traj(1, [[-2, 1], [-3, 1]])
        idx = build_visit_index([a, b])
        events = find_match(0, 0, (2, 1), idx, RuleConfig(SymmetryKind.MIRROR_Y))
        (ev,) = events
        assert ev.partner == 1
        assert ev.partner_tick == 0
        assert ev.image_node == (-2, 1)

    def test_no_match_when_image_never_visited(self):
        a = make_traj(0, [[2, 1], [3, 1]])
        idx = build_visit_index([a])
        assert find_match(0, 0, (2, 1), idx, RuleConfig(SymmetryKind.MIRROR_Y)) == ()

    def test_axis_node_is_vacuous(self):
        # a node on the mirror axis has no counterparts, so nothing to match
        a = make_traj(0, [[0, 3], [1, 3]])
        idx = build_visit_index([a])
        assert find_match(0, 0, (0, 3), idx, RuleConfig(SymmetryKind.MIRROR_Y)) == ()

    def test_self_future_visit_counts(self):
        # one particle visits (1,2) at tick 0 and (-1,2) at tick 2
        a = make_traj(0, [[1, 2], [0, 2], [-1, 2], [-1, 2]])
        idx = build_visit_index([a])
        events = find_match(0, 0, (1, 2), idx, RuleConfig(SymmetryKind.MIRROR_Y))
        (ev,) = events
        assert (ev.partner, ev.partner_tick) == (0, 2)

    def test_earlier_visits_do_not_count(self):
        # partner was at the image node strictly before the check tick
        a = make_traj(0, [[5, 5], [2, 1]])
        b = make_traj(1, [[-2, 1], [-5, 5]])
        idx = build_visit_index([a, b])
        assert find_match(0, 1, (2, 1), idx, RuleConfig(SymmetryKind.MIRROR_Y)) == ()

    def test_fourfold_requires_all_images(self):
        a = make_traj(0, [[2, 1]])
        b = make_traj(1, [[-2, 1]])
        c = make_traj(2, [[2, -1]])
        # missing (-2,-1): no match
        idx = build_visit_index([a, b, c])
        cfg = RuleConfig(SymmetryKind.FOURFOLD)
        assert find_match(0, 0, (2, 1), idx, cfg) == ()
        d = make_traj(3, [[-2, -1]])
        idx = build_visit_index([a, b, c, d])
        events = find_match(0, 0, (2, 1), idx, cfg)
        assert [ev.image_node for ev in events] == [(-2, 1), (2, -1), (-2, -1)]

    def test_agrees_with_naive_scan_on_random_walks(self):
        rng = Rng(77)
        trajs = []
        for pid in range(3):
            nodes = [[int(rng.next_unit() * 5) - 2, int(rng.next_unit() * 5) - 2]]
            for _ in range(25):
                i, j = nodes[-1]
                nodes.append(
                    [i + int(rng.next_unit() * 3) - 1, j + int(rng.next_unit() * 3) - 1]
                )
            trajs.append(make_traj(pid, nodes))
        idx = build_visit_index(trajs)
        for kind in (SymmetryKind.MIRROR_Y, SymmetryKind.FOURFOLD):
            cfg = RuleConfig(kind)
            for pid in range(3):
                for tick in range(26):
                    node = trajs[pid].node_at(tick)
                    got = find_match(pid, tick, node, idx, cfg)
                    want = naive_find_match(trajs, pid, tick, kind)
                    assert tuple(tuple(ev) for ev in got) == want


class TestApplyRule:
    def test_no_matches_no_deposits(self):
        # single particle far from the axis, never crossing
        a = make_traj(0, [[3, 1], [4, 1], [5, 1]])
        idx = build_visit_index([a])
        cfg = RuleConfig(SymmetryKind.MIRROR_Y)
        deposits = apply_rule([a], idx, cfg, Rng(0))
        assert deposits == []

    def test_mirrored_pair_full_resonance(self):
        # two particles in exact mirror lockstep, never on the axis:
        # every tick matches, immediate + scheduled deposits dedup to
        # exactly 2(K+1) total
        k = 12
        right = [[2 + (t % 3), 1 + t] for t in range(k + 1)]
        left = [[-i, j] for i, j in right]
        a, b = make_traj(0, right), make_traj(1, left)
        assert all(i != 0 for i, _ in right)
        idx = build_visit_index([a, b])
        cfg = RuleConfig(SymmetryKind.MIRROR_Y)
        deposits = apply_rule([a, b], idx, cfg, Rng(5))
        assert len(deposits) == 2 * (k + 1)
        nodes = {d.node for d in deposits}
        assert nodes == {tuple(n) for n in right} | {tuple(n) for n in left}
        # deposits arrive sorted by (tick, particle, node)
        keys = [(d.tick, d.particle, d.node) for d in deposits]
        assert keys == sorted(keys)

    def test_duplicate_keeps_first_emission_source(self):
        # mirror lockstep: at tick t, particle 0's check schedules a deposit
        # at particle 1's node (partner leg), and particle 1's own check
        # drops an immediate one at the same (node, tick, particle).  The
        # scheduled emission from the lower-particle check runs first and
        # is the one kept.
        right = [[2, 1], [3, 2]]
        left = [[-2, 1], [-3, 2]]
        a, b = make_traj(0, right), make_traj(1, left)
        idx = build_visit_index([a, b])
        deposits = apply_rule([a, b], idx, RuleConfig(SymmetryKind.MIRROR_Y), Rng(0))
        by_key = {(d.node, d.tick, d.particle): d for d in deposits}
        assert by_key[((-2, 1), 0, 1)].source == "scheduled"
        assert by_key[((2, 1), 0, 0)].source == "immediate"

    def test_probability_zero_silences_but_draws(self):
        right = [[2, 1], [3, 2]]
        left = [[-2, 1], [-3, 2]]
        a, b = make_traj(0, right), make_traj(1, left)
        idx = build_visit_index([a, b])
        rng = Rng(9)
        deposits = apply_rule([a, b], idx, RuleConfig(SymmetryKind.MIRROR_Y, probability=0.0), rng)
        assert deposits == []
        # one gate draw per check: 2 particles x 2 ticks
        expect = Rng(9)
        for _ in range(4):
            expect.next_unit()
        assert rng.state == expect.state

    def test_probability_one_consumes_no_draws(self):
        right = [[2, 1], [3, 2]]
        left = [[-2, 1], [-3, 2]]
        a, b = make_traj(0, right), make_traj(1, left)
        idx = build_visit_index([a, b])
        rng = Rng(9)
        apply_rule([a, b], idx, RuleConfig(SymmetryKind.MIRROR_Y, probability=1.0), rng)
        assert rng.state == Rng(9).state

    def test_probability_monotone_in_expectation(self):
        rng = Rng(31)
        trajs = []
        for pid in range(6):
            nodes = [[int(rng.next_unit() * 9) - 4, int(rng.next_unit() * 9) - 4]]
            for _ in range(40):
                i, j = nodes[-1]
                nodes.append(
                    [i + int(rng.next_unit() * 3) - 1, j + int(rng.next_unit() * 3) - 1]
                )
            trajs.append(make_traj(pid, nodes))
        idx = build_visit_index(trajs)
        means = []
        for prob in (0.2, 0.6, 1.0):
            cfg = RuleConfig(SymmetryKind.MIRROR_Y, probability=prob)
            counts = [len(apply_rule(trajs, idx, cfg, Rng(seed))) for seed in range(30)]
            means.append(sum(counts) / len(counts))
        assert means[0] <= means[1] <= means[2]

    def test_per_particle_kind_override(self):
        # particle 0 under fourfold finds no full orbit; override just that
        # particle to mirror_y and its check fires against b's later visit
        a = make_traj(0, [[2, 1], [3, 1]])
        b = make_traj(1, [[-9, 9], [-2, 1]])
        idx = build_visit_index([a, b])
        base = RuleConfig(SymmetryKind.FOURFOLD)
        assert apply_rule([a, b], idx, base, Rng(0)) == []
        mixed = RuleConfig(SymmetryKind.FOURFOLD, overrides={0: SymmetryKind.MIRROR_Y})
        deposits = apply_rule([a, b], idx, mixed, Rng(0))
        assert deposits == [
            (( 2, 1), 0, 0, "immediate"),
            ((-2, 1), 1, 1, "scheduled"),
        ]

    def test_trajectories_unchanged(self):
        right = [[2, 1], [3, 2]]
        a = make_traj(0, right)
        b = make_traj(1, [[-2, 1], [-3, 2]])
        before = a.nodes.copy()
        idx = build_visit_index([a, b])
        apply_rule([a, b], idx, RuleConfig(SymmetryKind.MIRROR_Y), Rng(0))
        assert np.array_equal(a.nodes, before)


class TestCausalityGuard:
    def test_builtin_rules_pass(self):
        assert causality_guard(MIRROR_Y_RULE)
        assert causality_guard(FOURFOLD_RULE)
        assert MIRROR_Y_RULE.reads_future
        assert not MIRROR_Y_RULE.modifies_motion

    def test_future_reading_motion_writer_rejected(self):
        bad = RuleDescriptor(name="bad", reads_future=True, modifies_motion=True)
        assert not causality_guard(bad)

    def test_motion_writer_without_future_reads_allowed(self):
        ok = RuleDescriptor(name="drag", reads_future=False, modifies_motion=True)
        assert causality_guard(ok)

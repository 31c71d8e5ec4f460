"""Deposit counting and the radial histogram."""

from __future__ import annotations

import math

import numpy as np
import pytest

from switchsim.dynamics import Trajectory, build_visit_index
from switchsim.geometry import Domain
from switchsim.metrics import (
    bin_distances,
    deposit_distance,
    ns_count,
    radial_distribution,
)
from switchsim.rng import Rng
from switchsim.symmetry import Deposit, RuleConfig, SymmetryKind, apply_rule


def dep(node, tick=0, particle=0):
    return Deposit(node=node, tick=tick, particle=particle, source="immediate")


class TestNsCount:
    def test_empty(self):
        assert ns_count([]) == 0

    def test_three(self):
        assert ns_count([dep((0, 1)), dep((1, 1)), dep((2, 2))]) == 3


class TestDepositDistance:
    def test_origin(self):
        assert deposit_distance(dep((0, 0)), 10) == 0.0

    def test_axis_node(self):
        assert deposit_distance(dep((5, 0)), 10) == pytest.approx(0.5)

    def test_pythagorean(self):
        assert deposit_distance(dep((3, 4)), 10) == pytest.approx(0.5)


class TestBinDistances:
    def test_zero_goes_to_first_bin(self):
        hist = bin_distances([0.0], 10, 1.0)
        assert hist.counts[0] == 1
        assert hist.total == 1

    def test_halfway_value_lands_in_bin_five(self):
        # bins are half-open [lo, hi): 0.5 with width 0.1 starts bin 5
        hist = bin_distances([0.5], 10, 1.0)
        assert hist.counts == [0, 0, 0, 0, 0, 1, 0, 0, 0, 0]

    def test_boundary_value_goes_to_last_bin(self):
        hist = bin_distances([1.0], 10, 1.0)
        assert hist.counts[-1] == 1

    def test_ring_concentration(self):
        vals = [0.75 + 0.004 * k for k in range(10)]  # all inside [0.7, 0.8)
        hist = bin_distances(vals, 10, 1.0)
        assert hist.counts[7] == 10
        assert hist.total == 10

    def test_rows_cover_radius_without_gaps(self):
        hist = bin_distances([0.3] * 4, 8, 2.0)
        rows = list(hist.rows())
        assert len(rows) == 8
        assert rows[0][0] == 0.0
        assert rows[-1][1] == pytest.approx(2.0)
        for (lo_a, hi_a, _), (lo_b, _, _) in zip(rows, rows[1:]):
            assert hi_a == pytest.approx(lo_b)
        assert sum(count for _, _, count in rows) == 4

    def test_bad_bin_count_rejected(self):
        with pytest.raises(ValueError):
            bin_distances([0.1], 0, 1.0)

    def test_bad_radius_rejected(self):
        with pytest.raises(ValueError):
            bin_distances([0.1], 4, 0.0)


class TestRadialDistribution:
    def test_total_equals_deposit_count(self):
        # deposits from an actual rule pass, histogram mass is conserved
        def walk(pid, seed):
            rng = Rng(seed)
            nodes = [[int(rng.next_unit() * 9) - 4, int(rng.next_unit() * 9) - 4]]
            for _ in range(40):
                i, j = nodes[-1]
                ni = i + int(rng.next_unit() * 3) - 1
                nj = j + int(rng.next_unit() * 3) - 1
                if ni * ni + nj * nj > 100:
                    ni, nj = i, j
                nodes.append([ni, nj])
            return Trajectory(particle=pid, nodes=np.array(nodes, dtype=np.int64))

        trajs = [walk(pid, 100 + pid) for pid in range(5)]
        idx = build_visit_index(trajs)
        deposits = apply_rule(trajs, idx, RuleConfig(SymmetryKind.MIRROR_Y), Rng(0))
        assert deposits  # the construction should actually fire
        dom = Domain(1.0)
        hist = radial_distribution(deposits, 50, dom, 10)
        assert hist.total == ns_count(deposits)
        assert all(c >= 0 for c in hist.counts)

    def test_all_distances_within_radius(self):
        deposits = [dep((i, j)) for i in range(-10, 11) for j in range(-10, 11)
                    if i * i + j * j <= 100]
        hist = radial_distribution(deposits, 25, Domain(1.0), 10)
        assert hist.total == len(deposits)

    def test_mirror_image_deposits_give_identical_histogram(self):
        base = [dep((2, 1)), dep((5, -3)), dep((7, 0)), dep((1, 9))]
        mirrored = [dep((-n[0], n[1])) for n in (d.node for d in base)]
        dom = Domain(1.0)
        a = radial_distribution(base, 20, dom, 12)
        b = radial_distribution(mirrored, 20, dom, 12)
        assert a.counts == b.counts

    def test_binning_matches_direct_computation(self):
        deposits = [dep((3, 4)), dep((0, 0)), dep((6, 8))]
        hist = radial_distribution(deposits, 10, Domain(1.0), 10)
        direct = bin_distances([0.5, 0.0, 1.0], 10, 1.0)
        assert hist.counts == direct.counts

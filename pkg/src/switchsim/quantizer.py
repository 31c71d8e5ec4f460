"""Convert a sampled continuous trajectory into lattice switching decisions.

Three solvers share one objective: the summed Euclidean distance between the
lattice node chosen at each tick and the continuous sample at that tick.

* ``greedy_quantize`` is the online policy the simulator uses: at every tick
  it takes whichever of the nine actions (eight moves plus HOLD) lands
  nearest the next sample.
* ``optimal_quantize`` is a dynamic program over a corridor of nodes around
  the snapped samples; it is globally optimal within the corridor.
* ``brute_force_quantize`` enumerates every action sequence (desk scale
  only) and is the verification oracle for the other two.

Actions are indices 0..7 into ``geometry.NEIGHBOR_OFFSETS`` plus ``HOLD``
(= 8), the stay-in-place action that doubles as speed zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .geometry import NEIGHBOR_OFFSETS, Domain, GridIndex, Position, node_in_domain, node_position, snap

HOLD = 8
BRUTE_FORCE_MAX_TICKS = 6

_OFFSETS = np.array(NEIGHBOR_OFFSETS, dtype=np.int64)


class InfeasibleError(ValueError):
    """No plan exists within the requested corridor."""


@dataclass
class SwitchPlan:
    """A lattice node per tick plus the action taken between ticks."""

    nodes: np.ndarray    # (K+1, 2) int64
    actions: np.ndarray  # (K,) int64, values 0..8

    def node_at(self, t: int) -> GridIndex:
        return (int(self.nodes[t, 0]), int(self.nodes[t, 1]))

    def __len__(self) -> int:
        return self.nodes.shape[0]


def _as_samples(samples: Sequence[Position]) -> np.ndarray:
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
        raise ValueError("trajectory samples must be a non-empty sequence of (x, y) pairs")
    if not np.all(np.isfinite(arr)):
        raise ValueError("trajectory samples must be finite")
    return arr


def _domain_limit_sq(d: int, dom: Optional[Domain]) -> float:
    # Negative sentinel disables the in-domain test inside the kernel.
    if dom is None:
        return -1.0
    limit = dom.radius * d
    return limit * limit


def plan_cost(plan: SwitchPlan, samples: Sequence[Position], d: int) -> float:
    """Summed Euclidean deviation between plan nodes and samples, tick by tick."""
    arr = _as_samples(samples)
    if plan.nodes.shape[0] != arr.shape[0]:
        raise ValueError(
            f"plan has {plan.nodes.shape[0]} ticks but trajectory has {arr.shape[0]}"
        )
    total = 0.0
    for t in range(arr.shape[0]):
        x, y = node_position((int(plan.nodes[t, 0]), int(plan.nodes[t, 1])), d)
        total += math.hypot(x - arr[t, 0], y - arr[t, 1])
    return total


@njit(cache=True)
def _greedy_track(gx, gy, start_i, start_j, limit_sq):  # pragma: no cover - exercised via greedy_quantize
    k = gx.shape[0] - 1
    nodes = np.empty((k + 1, 2), dtype=np.int64)
    actions = np.empty(k, dtype=np.int64)
    ci, cj = start_i, start_j
    nodes[0, 0] = ci
    nodes[0, 1] = cj
    for t in range(k):
        tx = gx[t + 1]
        ty = gy[t + 1]
        # HOLD is always admissible (current node is in-domain by induction)
        # and wins ties, then the moves in offset order.
        dx = ci - tx
        dy = cj - ty
        best = dx * dx + dy * dy
        best_action = HOLD
        for a in range(8):
            ni = ci + _OFFSETS[a, 0]
            nj = cj + _OFFSETS[a, 1]
            if limit_sq >= 0.0 and float(ni * ni + nj * nj) > limit_sq:
                continue
            ddx = ni - tx
            ddy = nj - ty
            cost = ddx * ddx + ddy * ddy
            if cost < best:
                best = cost
                best_action = a
        if best_action != HOLD:
            ci += _OFFSETS[best_action, 0]
            cj += _OFFSETS[best_action, 1]
        nodes[t + 1, 0] = ci
        nodes[t + 1, 1] = cj
        actions[t] = best_action
    return nodes, actions


def greedy_quantize(
    samples: Sequence[Position],
    start: GridIndex,
    d: int,
    dom: Optional[Domain] = None,
) -> SwitchPlan:
    """Online quantization: per tick, the action landing nearest the next sample.

    Candidate selection happens in lattice units (node index minus d*sample),
    which has the same argmin as the Euclidean deviation. Ties prefer HOLD,
    then the lowest move index. Candidates outside the domain are excluded.
    """
    arr = _as_samples(samples)
    if d < 1:
        raise ValueError(f"lattice scale must be >= 1, got {d}")
    if dom is not None and not node_in_domain(start, d, dom):
        raise ValueError(f"start node {start} lies outside the domain")
    nodes, actions = _greedy_track(
        arr[:, 0] * d, arr[:, 1] * d, start[0], start[1], _domain_limit_sq(d, dom)
    )
    return SwitchPlan(nodes=nodes, actions=actions)


def _step_cost(node: GridIndex, sample_x: float, sample_y: float, d: int) -> float:
    return math.hypot(node[0] / d - sample_x, node[1] / d - sample_y)


def optimal_quantize(
    samples: Sequence[Position],
    start: GridIndex,
    d: int,
    window: int,
    dom: Optional[Domain] = None,
) -> SwitchPlan:
    """Minimum-cost plan over a corridor of nodes around the snapped samples.

    State space is (tick, node) with nodes at Chebyshev distance <= window
    from snap(sample[t]). Transition ties break on the lower incoming action
    index, then the smaller predecessor node, so results are deterministic.

    Raises InfeasibleError when the start is outside the tick-0 corridor or
    the corridor goes dark mid-trajectory.
    """
    arr = _as_samples(samples)
    if d < 1:
        raise ValueError(f"lattice scale must be >= 1, got {d}")
    if window < 1:
        raise ValueError(f"corridor window must be >= 1, got {window}")

    k = arr.shape[0] - 1
    centers = [snap((arr[t, 0], arr[t, 1]), d) for t in range(k + 1)]

    def in_corridor(node: GridIndex, t: int) -> bool:
        ci, cj = centers[t]
        if max(abs(node[0] - ci), abs(node[1] - cj)) > window:
            return False
        return dom is None or node_in_domain(node, d, dom)

    start = (int(start[0]), int(start[1]))
    if not in_corridor(start, 0):
        raise InfeasibleError(
            f"start node {start} is outside the tick-0 corridor (center {centers[0]}, window {window})"
        )

    # best[node] = (cost so far, incoming action, predecessor node)
    best: dict[GridIndex, tuple[float, int, Optional[GridIndex]]] = {
        start: (_step_cost(start, arr[0, 0], arr[0, 1], d), -1, None)
    }
    history: list[dict[GridIndex, tuple[float, int, Optional[GridIndex]]]] = [best]

    for t in range(k):
        nxt: dict[GridIndex, tuple[float, int, Optional[GridIndex]]] = {}
        sx, sy = arr[t + 1, 0], arr[t + 1, 1]
        for prev in sorted(best):
            prev_cost = best[prev][0]
            for action in range(9):
                if action == HOLD:
                    node = prev
                else:
                    off = NEIGHBOR_OFFSETS[action]
                    node = (prev[0] + off[0], prev[1] + off[1])
                if not in_corridor(node, t + 1):
                    continue
                cost = prev_cost + _step_cost(node, sx, sy, d)
                incumbent = nxt.get(node)
                if incumbent is None or (cost, action, prev) < (incumbent[0], incumbent[1], incumbent[2]):
                    nxt[node] = (cost, action, prev)
        if not nxt:
            raise InfeasibleError(f"corridor window {window} leaves no reachable node at tick {t + 1}")
        history.append(nxt)
        best = nxt

    final = min(best, key=lambda node: (best[node][0], node))
    nodes = np.empty((k + 1, 2), dtype=np.int64)
    actions = np.empty(k, dtype=np.int64)
    node = final
    for t in range(k, 0, -1):
        cost, action, prev = history[t][node]
        nodes[t, 0], nodes[t, 1] = node
        actions[t - 1] = action
        node = prev
    nodes[0, 0], nodes[0, 1] = node
    return SwitchPlan(nodes=nodes, actions=actions)


def brute_force_quantize(
    samples: Sequence[Position],
    start: GridIndex,
    d: int,
    dom: Optional[Domain] = None,
) -> SwitchPlan:
    """Globally minimal plan by exhaustive enumeration of action sequences.

    Refuses more than BRUTE_FORCE_MAX_TICKS transitions (9^K plans). Ties
    break to the lexicographically smallest action sequence. The search is a
    depth-first walk in action order with an admissible lower-bound prune
    (each remaining tick costs at least the distance from the sample to its
    nearest node), which cannot change the returned optimum.
    """
    arr = _as_samples(samples)
    if d < 1:
        raise ValueError(f"lattice scale must be >= 1, got {d}")
    k = arr.shape[0] - 1
    if k > BRUTE_FORCE_MAX_TICKS:
        raise ValueError(
            f"exhaustive search refuses {k} ticks (limit {BRUTE_FORCE_MAX_TICKS}): 9^{k} plans"
        )
    start = (int(start[0]), int(start[1]))
    if dom is not None and not node_in_domain(start, d, dom):
        raise ValueError(f"start node {start} lies outside the domain")

    # suffix[t] = sum over u >= t of the distance from sample u to its nearest node
    suffix = [0.0] * (k + 2)
    for t in range(k, -1, -1):
        nearest = snap((arr[t, 0], arr[t, 1]), d)
        suffix[t] = suffix[t + 1] + _step_cost(nearest, arr[t, 0], arr[t, 1], d)

    best_cost = math.inf
    best_actions: Optional[list[int]] = None
    prefix: list[int] = []

    def walk(t: int, node: GridIndex, cost: float) -> None:
        nonlocal best_cost, best_actions
        if t == k:
            if cost < best_cost:
                best_cost = cost
                best_actions = prefix.copy()
            return
        if cost + suffix[t + 1] >= best_cost:
            return
        sx, sy = arr[t + 1, 0], arr[t + 1, 1]
        for action in range(9):
            if action == HOLD:
                nxt = node
            else:
                off = NEIGHBOR_OFFSETS[action]
                nxt = (node[0] + off[0], node[1] + off[1])
                if dom is not None and not node_in_domain(nxt, d, dom):
                    continue
            prefix.append(action)
            walk(t + 1, nxt, cost + _step_cost(nxt, sx, sy, d))
            prefix.pop()

    walk(0, start, _step_cost(start, arr[0, 0], arr[0, 1], d))
    assert best_actions is not None  # k=0 hits the base case immediately

    nodes = np.empty((k + 1, 2), dtype=np.int64)
    actions = np.array(best_actions, dtype=np.int64)
    node = start
    nodes[0, 0], nodes[0, 1] = node
    for t, action in enumerate(best_actions):
        if action != HOLD:
            off = NEIGHBOR_OFFSETS[action]
            node = (node[0] + off[0], node[1] + off[1])
        nodes[t + 1, 0], nodes[t + 1, 1] = node
    return SwitchPlan(nodes=nodes, actions=actions)

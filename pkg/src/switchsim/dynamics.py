"""Particle motion inside the reflecting disk and its lattice shadow.

The continuous path of a particle is an exact billiard trajectory: straight
chords joined by specular bounces off the circle, computed with the
cancellation-free ray intersection from :mod:`switchsim.geometry`. The
lattice never influences the physics; the quantizer merely tracks the
continuous path, so boundary behaviour is identical at every scale.

One tick corresponds to one lattice cell of arc length (dt = 1/(D*v)), which
keeps the per-tick displacement of the sampled path exactly h and inside the
greedy tracker's comfort zone.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .geometry import (
    NEIGHBOR_OFFSETS,
    Domain,
    GridIndex,
    Position,
    node_in_domain,
    ray_circle_exit,
    reflect,
    snap,
    unit_direction,
)
from .quantizer import greedy_quantize


@dataclass(frozen=True)
class MovementEquation:
    """Straight-line motion law: start point, heading angle, constant speed."""

    p0: Position
    theta0: float
    v: float = 1.0

    def __post_init__(self) -> None:
        x, y = self.p0
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(self.theta0)):
            raise ValueError("movement equation requires finite p0 and theta0")
        if not self.v > 0:
            raise ValueError(f"speed must be positive, got {self.v}")


@dataclass(frozen=True)
class Particle:
    id: int
    eq: MovementEquation


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Quantized node sequence of one particle, immutable once built."""

    particle: int
    nodes: np.ndarray  # (K+1, 2) int64, read-only

    def __post_init__(self) -> None:
        self.nodes.setflags(write=False)

    def node_at(self, t: int) -> GridIndex:
        return (int(self.nodes[t, 0]), int(self.nodes[t, 1]))

    def __len__(self) -> int:
        return self.nodes.shape[0]


def ideal_path(eq: MovementEquation, dom: Domain, k: int, dt: float) -> np.ndarray:
    """Positions of the continuous billiard path at ticks 0..k.

    Chords are traced to exact boundary intersections, the hit point is
    renormalized onto the circle, and the heading is reflected specularly.
    Tick positions are then interpolated along the chord polyline by arc
    length (the path is traversed at constant speed).

    Returns an (k+1, 2) float array; row 0 is exactly ``eq.p0``.
    """
    if k < 0:
        raise ValueError(f"tick count must be >= 0, got {k}")
    if not dt > 0:
        raise ValueError(f"tick duration must be positive, got {dt}")
    px, py = float(eq.p0[0]), float(eq.p0[1])
    if math.hypot(px, py) >= dom.radius:
        raise ValueError(
            f"start position ({px}, {py}) must lie strictly inside the domain of radius {dom.radius}"
        )
    if k == 0:
        return np.array([[px, py]], dtype=np.float64)

    step = eq.v * dt
    need = k * step
    verts: List[Position] = [(px, py)]
    dirs: List[Position] = []
    cum: List[float] = [0.0]
    pos: Position = (px, py)
    head = unit_direction(eq.theta0)
    total = 0.0
    while total < need:
        dist = ray_circle_exit(pos, head, dom.radius)
        if dist <= 0.0:
            raise ArithmeticError("degenerate tangential chord at the boundary")
        hx = pos[0] + dist * head[0]
        hy = pos[1] + dist * head[1]
        scale = dom.radius / math.hypot(hx, hy)
        hit = (hx * scale, hy * scale)
        dirs.append(head)
        verts.append(hit)
        total += dist
        cum.append(total)
        head = reflect(hit, head, dom)
        norm = math.hypot(head[0], head[1])
        head = (head[0] / norm, head[1] / norm)
        pos = hit

    s = np.arange(k + 1, dtype=np.float64) * step
    cum_arr = np.asarray(cum)
    vert_arr = np.asarray(verts)
    dir_arr = np.asarray(dirs)
    idx = np.searchsorted(cum_arr, s, side="right") - 1
    idx = np.clip(idx, 0, dir_arr.shape[0] - 1)
    delta = s - cum_arr[idx]
    return vert_arr[idx] + delta[:, None] * dir_arr[idx]


def clamp_start_node(p: Position, d: int, dom: Domain) -> GridIndex:
    """Nearest in-domain node to p: snap(p) when legal, else the best of its
    eight neighbours by scaled squared distance (first-listed wins ties).

    For any p strictly inside the disk at least one neighbour qualifies: the
    node obtained by truncating each scaled coordinate toward zero is no
    farther from the origin than p and differs from snap(p) by at most one
    step per component.
    """
    g = snap(p, d)
    if node_in_domain(g, d, dom):
        return g
    sx, sy = p[0] * d, p[1] * d
    best: Optional[GridIndex] = None
    best_m = math.inf
    for oi, oj in NEIGHBOR_OFFSETS:
        cand = (g[0] + oi, g[1] + oj)
        if not node_in_domain(cand, d, dom):
            continue
        m = (cand[0] - sx) ** 2 + (cand[1] - sy) ** 2
        if m < best_m:
            best_m = m
            best = cand
    if best is None:
        raise ValueError(f"no lattice node near {p} lies inside the domain")
    return best


def quantize_trajectory(
    ideal: Sequence[Position],
    start: GridIndex,
    d: int,
    dom: Optional[Domain] = None,
    particle: int = 0,
) -> Trajectory:
    """Greedy lattice tracking of a sampled continuous path."""
    plan = greedy_quantize(ideal, start, d, dom)
    return Trajectory(particle=particle, nodes=plan.nodes)


_NO_VISITS: List[Tuple[int, int]] = []


class VisitIndex:
    """Map from lattice node to every (tick, particle) visit, tick-sorted.

    Built once from the full trajectory set and then queried read-only; the
    sorted lists make earliest-future-visit lookups a bisect instead of a
    scan over all particles and ticks.
    """

    __slots__ = ("_visits", "total_visits")

    def __init__(self, visits: Dict[GridIndex, List[Tuple[int, int]]], total: int):
        self._visits = visits
        self.total_visits = total

    def visits(self, node: GridIndex) -> List[Tuple[int, int]]:
        """All (tick, particle) pairs recorded at node, sorted ascending."""
        return self._visits.get(node, _NO_VISITS)

    def earliest(
        self,
        node: GridIndex,
        tick: int,
        exclude: Optional[Tuple[int, int]] = None,
    ) -> Optional[Tuple[int, int]]:
        """Smallest (tick', particle) visit at node with tick' >= tick.

        ``exclude`` skips exactly one (tick, particle) entry, used to keep a
        particle's own current visit from matching itself.
        """
        lst = self._visits.get(node)
        if not lst:
            return None
        pos = bisect.bisect_left(lst, (tick, -1))
        n = len(lst)
        while pos < n:
            entry = lst[pos]
            if entry != exclude:
                return entry
            pos += 1
        return None

    def nodes(self) -> List[GridIndex]:
        return list(self._visits.keys())


def build_visit_index(trajectories: Sequence[Trajectory]) -> VisitIndex:
    """Index every node visit of every trajectory.

    All trajectories must cover the same tick range.
    """
    if trajectories:
        length = len(trajectories[0])
        for traj in trajectories:
            if len(traj) != length:
                raise ValueError("all trajectories must span the same number of ticks")
    visits: Dict[GridIndex, List[Tuple[int, int]]] = {}
    total = 0
    for traj in trajectories:
        pid = traj.particle
        for t, (i, j) in enumerate(traj.nodes.tolist()):
            visits.setdefault((i, j), []).append((t, pid))
        total += len(traj)
    for lst in visits.values():
        lst.sort()
    return VisitIndex(visits, total)

"""Non-local symmetry rules that freeze pattern points.

A rule watches every particle at every tick. When the particle's node has
symmetric counterpart nodes that some particle (possibly itself) visits now
or later, the rule fires: the watcher's node is deposited immediately and
each counterpart node is deposited at the tick of its earliest qualifying
visit. Motion is never altered — a frozen copy is recorded while the mover
keeps going — so rules may read the future without creating causal loops.

Matching is exact integer negation of node indices. The lattice is origin
centered, which makes mirror images of nodes nodes again; the grid spacing
is therefore the effective match tolerance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Mapping, NamedTuple, Optional, Sequence, Tuple

from .dynamics import Trajectory, VisitIndex
from .geometry import GridIndex
from .rng import Rng


class SymmetryKind(enum.Enum):
    """Which node images count as symmetric counterparts."""

    MIRROR_Y = "mirror_y"    # reflection about the y axis: (i, j) -> (-i, j)
    FOURFOLD = "fourfold"    # both axis mirrors plus the point reflection


class MatchEvent(NamedTuple):
    particle: int
    tick: int
    partner: int
    partner_tick: int
    image_node: GridIndex


class Deposit(NamedTuple):
    node: GridIndex
    tick: int
    particle: int
    source: str  # "immediate" | "scheduled"


@dataclass(frozen=True)
class RuleConfig:
    """Rule selection: the kind, a firing probability, per-particle overrides."""

    kind: SymmetryKind
    probability: float = 1.0
    overrides: Mapping[int, SymmetryKind] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"rule probability must lie in [0, 1], got {self.probability}")

    def kind_for(self, particle: int) -> SymmetryKind:
        return self.overrides.get(particle, self.kind)


def orbit(g: GridIndex, kind: SymmetryKind) -> Tuple[GridIndex, ...]:
    """Symmetric images of g, in fixed order, deduplicated, g itself excluded.

    Excluding g keeps nodes on a symmetry axis from matching themselves at
    their own tick; an axis node under MIRROR_Y has an empty orbit.
    """
    i, j = g
    if kind is SymmetryKind.MIRROR_Y:
        images: Tuple[GridIndex, ...] = ((-i, j),)
    elif kind is SymmetryKind.FOURFOLD:
        images = ((-i, j), (i, -j), (-i, -j))
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown symmetry kind: {kind!r}")
    out: List[GridIndex] = []
    for img in images:
        if img != g and img not in out:
            out.append(img)
    return tuple(out)


def find_match(
    particle: int,
    tick: int,
    node: GridIndex,
    index: VisitIndex,
    cfg: RuleConfig,
) -> Tuple[MatchEvent, ...]:
    """Counterpart visits for a particle standing at node on a given tick.

    Every image node in the orbit must have a visit at some tick' >= tick
    (one event per image, each the earliest such visit ordered by tick then
    particle id); otherwise the result is empty. A particle may match its
    own future visits, but never its own current one.
    """
    images = orbit(node, cfg.kind_for(particle))
    if not images:
        return ()
    events: List[MatchEvent] = []
    own = (tick, particle)
    for img in images:
        hit = index.earliest(img, tick, exclude=own)
        if hit is None:
            return ()
        events.append(MatchEvent(particle, tick, hit[1], hit[0], img))
    return tuple(events)


def apply_rule(
    trajectories: Sequence[Trajectory],
    index: VisitIndex,
    cfg: RuleConfig,
    rng: Optional[Rng] = None,
) -> List[Deposit]:
    """Run the rule over every (tick, particle) visit and collect deposits.

    Checks proceed tick-major, particles in ascending id within a tick. With
    probability < 1 each check consumes exactly one rng draw and fires when
    the draw falls below the probability; with probability = 1 no draws are
    consumed. A firing check deposits the watcher's node immediately plus
    one scheduled deposit per matched image. Trajectories are read-only
    throughout; the result is deduplicated on (node, tick, particle) keeping
    the first emission, then sorted by (tick, particle, node).
    """
    if not trajectories:
        return []
    gated = cfg.probability < 1.0
    if gated and rng is None:
        raise ValueError("probabilistic rule needs an rng")
    ordered = sorted(trajectories, key=lambda traj: traj.particle)
    node_lists = [(traj.particle, traj.nodes.tolist()) for traj in ordered]
    ticks = len(ordered[0])

    deposits: List[Deposit] = []
    seen = set()

    def emit(node: GridIndex, tick: int, particle: int, source: str) -> None:
        key = (node, tick, particle)
        if key not in seen:
            seen.add(key)
            deposits.append(Deposit(node, tick, particle, source))

    for t in range(ticks):
        for pid, nodes in node_lists:
            if gated and not rng.next_unit() < cfg.probability:
                continue
            i, j = nodes[t]
            events = find_match(pid, t, (i, j), index, cfg)
            if not events:
                continue
            emit((i, j), t, pid, "immediate")
            for ev in events:
                emit(ev.image_node, ev.partner_tick, ev.partner, "scheduled")

    deposits.sort(key=lambda dep: (dep.tick, dep.particle, dep.node))
    return deposits


@dataclass(frozen=True)
class RuleDescriptor:
    """Static causal footprint of a rule: what it reads and what it touches."""

    name: str
    reads_future: bool
    modifies_motion: bool


MIRROR_Y_RULE = RuleDescriptor("mirror_y", reads_future=True, modifies_motion=False)
FOURFOLD_RULE = RuleDescriptor("fourfold", reads_future=True, modifies_motion=False)


def causality_guard(rule: RuleDescriptor) -> bool:
    """Admit a rule unless it both reads the future and modifies motion.

    That conjunction is exactly the configuration that can feed a future
    observation back into the motion that produces it; read-only rules and
    present-only rules are always safe.
    """
    return not (rule.reads_future and rule.modifies_motion)

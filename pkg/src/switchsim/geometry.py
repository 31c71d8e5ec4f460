"""Positions, the scaled lattice, the circular domain, and specular reflection.

The lattice has one node every 1/D distance units, centered on the origin, so
the mirror of node (i, j) about the y axis is exactly node (-i, j): symmetry
matching downstream reduces to integer negation with no floating tolerance.

All functions here are pure; tuples are used for positions, directions and
grid indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

Position = tuple[float, float]
Direction = tuple[float, float]
GridIndex = tuple[int, int]

# Neighbor offsets in fixed order E, NE, N, NW, W, SW, S, SE. Action indices
# elsewhere refer to positions in this tuple.
NEIGHBOR_OFFSETS: tuple[GridIndex, ...] = (
    (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1),
)


@dataclass(frozen=True)
class Domain:
    """Closed disk of the given radius, centered on the origin."""

    radius: float

    def __post_init__(self):
        if not (self.radius > 0) or not math.isfinite(self.radius):
            raise ValueError(f"domain radius must be positive and finite, got {self.radius}")


def _round_half_up(value: float) -> int:
    # Halves round toward +inf so every implementation agrees bit-for-bit.
    return math.floor(value + 0.5)


def snap(p: Position, d: int) -> GridIndex:
    """Nearest lattice node to p at scale d (nodes per distance unit)."""
    if d < 1:
        raise ValueError(f"lattice scale must be >= 1, got {d}")
    return (_round_half_up(p[0] * d), _round_half_up(p[1] * d))


def node_position(g: GridIndex, d: int) -> Position:
    """Continuous position of lattice node g at scale d."""
    if d < 1:
        raise ValueError(f"lattice scale must be >= 1, got {d}")
    return (g[0] / d, g[1] / d)


def neighbors8(g: GridIndex) -> list[GridIndex]:
    """The eight neighbors of g, in the fixed E, NE, N, NW, W, SW, S, SE order."""
    i, j = g
    return [(i + di, j + dj) for di, dj in NEIGHBOR_OFFSETS]


def node_in_domain(g: GridIndex, d: int, dom: Domain) -> bool:
    """Whether node g lies inside the closed disk (|position| <= radius).

    Compares i^2 + j^2 against (radius*d)^2 so the test is exact in integer
    arithmetic whenever radius*d is integral; this one comparison form is the
    canonical in-domain test used everywhere.
    """
    i, j = g
    limit = dom.radius * d
    return float(i * i + j * j) <= limit * limit


def reflect(pos: Position, direction: Direction, dom: Domain) -> Direction:
    """Specular reflection of an outward direction at a boundary point.

    d' = d - 2 (d . n) n with n the outward unit normal pos/|pos|. Preserves
    the magnitude of d and flips the sign of its radial component.
    """
    px, py = pos
    norm = math.hypot(px, py)
    if norm == 0.0:
        raise ValueError("cannot reflect at the origin: boundary normal is degenerate")
    if abs(norm - dom.radius) > 1e-9:
        raise ValueError(f"reflection point is not on the boundary: |pos|={norm!r}, radius={dom.radius!r}")
    nx, ny = px / norm, py / norm
    dx, dy = direction
    radial = dx * nx + dy * ny
    if radial <= 0.0:
        raise ValueError("direction must point outward at the boundary")
    return (dx - 2.0 * radial * nx, dy - 2.0 * radial * ny)


def ray_circle_exit(pos: Position, direction: Direction, radius: float) -> float:
    """Distance along a unit direction from an interior point to the circle.

    Solves |pos + t*direction| = radius for the positive root, in the
    cancellation-free form (uses the conjugate expression when the ray points
    outward). pos must satisfy |pos| <= radius.
    """
    px, py = pos
    dx, dy = direction
    b = px * dx + py * dy
    c = radius * radius - (px * px + py * py)
    if c < 0.0:
        c = 0.0
    disc = math.sqrt(b * b + c)
    if b > 0.0:
        return c / (disc + b)
    return disc - b


def unit_direction(theta: float) -> Direction:
    """Unit vector at angle theta radians from the +x axis."""
    return (math.cos(theta), math.sin(theta))

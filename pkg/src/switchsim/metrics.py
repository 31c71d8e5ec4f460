"""Pattern descriptors: deposit count and radial distance histogram."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, List, Sequence, Tuple

from .geometry import Domain, node_position
from .symmetry import Deposit


@dataclass
class RadialHistogram:
    bin_width: float
    counts: List[int]
    radius: float

    def rows(self) -> Iterator[Tuple[float, float, int]]:
        for k, count in enumerate(self.counts):
            yield k * self.bin_width, (k + 1) * self.bin_width, count

    @property
    def total(self) -> int:
        return sum(self.counts)


def ns_count(deposits: Sequence[Deposit]) -> int:
    """Size of a deduplicated deposit list."""
    return len(deposits)


def deposit_distance(dep: Deposit, d: int) -> float:
    x, y = node_position(dep.node, d)
    return math.hypot(x, y)


def bin_distances(distances: Sequence[float], bins: int, radius: float) -> RadialHistogram:
    """Histogram of distances over [0, radius].

    Bin k covers [k*w, (k+1)*w) with w = radius/bins; the last bin is closed
    so a value exactly on the boundary is counted.
    """
    if bins < 1:
        raise ValueError(f"bin count must be >= 1, got {bins}")
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    counts = [0] * bins
    for rho in distances:
        k = int(rho * bins / radius)
        if k >= bins:
            k = bins - 1
        counts[k] += 1
    return RadialHistogram(bin_width=radius / bins, counts=counts, radius=radius)


def radial_distribution(
    deposits: Sequence[Deposit], bins: int, dom: Domain, d: int
) -> RadialHistogram:
    """Radial histogram of deposit node distances from the origin."""
    return bin_distances(
        [deposit_distance(dep, d) for dep in deposits], bins, dom.radius
    )

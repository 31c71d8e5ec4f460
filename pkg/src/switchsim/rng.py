"""Deterministic pseudo-random numbers for reproducible simulations.

A fixed 64-bit linear congruential generator (Knuth's MMIX multiplier and
increment) drives every random decision in the simulator. The recurrence is
pure integer arithmetic mod 2^64, so a given seed produces the same sequence
on every platform and in every implementation of the same recurrence.

Draw order is part of the reproducibility contract: the simulator draws, for
each particle in id order, two unit variates for the position and then one
for the heading, and rule-probability gates draw one variate per check.
"""

from __future__ import annotations

import math

MULTIPLIER = 6364136223846793005
INCREMENT = 1442695040888963407

_MASK64 = (1 << 64) - 1
_UNIT_DENOM = float(1 << 53)


def lcg_step(state: int) -> int:
    """Advance the generator one step; the new state is also the output value."""
    return (state * MULTIPLIER + INCREMENT) & _MASK64


def unit_from_bits(value: int) -> float:
    """Map a 64-bit output to [0, 1) using its top 53 bits."""
    return (value >> 11) / _UNIT_DENOM


def disk_point(u1: float, u2: float, radius: float) -> tuple[float, float]:
    """Map two unit variates to a point of the disk of the given radius.

    Uses the exact polar method: rho = radius * sqrt(u1), phi = 2*pi*u2,
    which is uniform over the disk area and never rejects a draw.
    """
    if radius <= 0:
        raise ValueError(f"disk radius must be positive, got {radius}")
    rho = radius * math.sqrt(u1)
    phi = 2.0 * math.pi * u2
    return (rho * math.cos(phi), rho * math.sin(phi))


class Rng:
    """Stateful wrapper around the LCG, one instance per simulation."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = lcg_step(self.state)
        return self.state

    def next_unit(self) -> float:
        return unit_from_bits(self.next_u64())

    def sample_disk(self, radius: float) -> tuple[float, float]:
        """Draw a uniform point of the disk; consumes exactly two variates."""
        if radius <= 0:
            raise ValueError(f"disk radius must be positive, got {radius}")
        u1 = self.next_unit()
        u2 = self.next_unit()
        return disk_point(u1, u2, radius)

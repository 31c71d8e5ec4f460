"""switchsim: deterministic particle simulation on a switching lattice.

Particles move along exact billiard paths inside a reflecting disk while a
scale-D lattice tracks them through per-tick switching decisions (eight
moves plus hold). Non-local symmetry rules may freeze pattern points
whenever a node's mirror images are visited now or in the future; the
accumulated deposits are the emergent pattern.

Everything is reproducible bit-for-bit from a single 64-bit seed.
"""

from .geometry import Domain, GridIndex, Position, node_in_domain, node_position, snap
from .dynamics import (
    MovementEquation,
    Particle,
    Trajectory,
    VisitIndex,
    build_visit_index,
    ideal_path,
    quantize_trajectory,
)
from .quantizer import (
    HOLD,
    InfeasibleError,
    SwitchPlan,
    brute_force_quantize,
    greedy_quantize,
    optimal_quantize,
    plan_cost,
)
from .rng import Rng
from .symmetry import (
    Deposit,
    MatchEvent,
    RuleConfig,
    RuleDescriptor,
    SymmetryKind,
    apply_rule,
    causality_guard,
    find_match,
    orbit,
)
from .metrics import RadialHistogram, ns_count, radial_distribution
from .cli import SimConfig, parse_config, simulate

__version__ = "0.1.0"

__all__ = [
    "Domain",
    "GridIndex",
    "Position",
    "node_in_domain",
    "node_position",
    "snap",
    "MovementEquation",
    "Particle",
    "Trajectory",
    "VisitIndex",
    "build_visit_index",
    "ideal_path",
    "quantize_trajectory",
    "HOLD",
    "InfeasibleError",
    "SwitchPlan",
    "brute_force_quantize",
    "greedy_quantize",
    "optimal_quantize",
    "plan_cost",
    "Rng",
    "Deposit",
    "MatchEvent",
    "RuleConfig",
    "RuleDescriptor",
    "SymmetryKind",
    "apply_rule",
    "causality_guard",
    "find_match",
    "orbit",
    "RadialHistogram",
    "ns_count",
    "radial_distribution",
    "SimConfig",
    "parse_config",
    "simulate",
    "__version__",
]

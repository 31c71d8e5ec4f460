"""Configuration, simulation orchestration, experiment recipes, and I/O.

The command line exposes five subcommands:

* ``run <config> -o <dir>`` — one simulation; writes deposits.csv,
  histogram.csv, pattern.pgm and summary.txt into the directory.
* ``sweep <config> --vary key=v1,v2 --seeds s1,s2 -o <dir>`` — cross product
  of one varied parameter and a seed list; writes sweep.csv.
* ``render <deposits.csv> <config> -o <file.pgm>`` — re-render a deposit
  file without re-simulating.
* ``stats <deposits.csv> --bins B [--radius R]`` — radial histogram to
  stdout.
* ``verify`` — self-check: solver cross-oracles, indexed-vs-naive matcher
  equivalence, and symmetry closure invariants.

Exit codes: 0 success, 1 validation or I/O error, 2 oracle failure.

All artifacts are byte-deterministic for a given config: floats are printed
with nine significant digits, rows are canonically sorted, and files use
``\\n`` separators regardless of platform conventions.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import (
    MovementEquation,
    Particle,
    Trajectory,
    VisitIndex,
    build_visit_index,
    clamp_start_node,
    ideal_path,
    quantize_trajectory,
)
from .geometry import Domain, Position, node_position, snap
from .metrics import (
    RadialHistogram,
    bin_distances,
    deposit_distance,
    ns_count,
    radial_distribution,
)
from .quantizer import (
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
    SymmetryKind,
    apply_rule,
    find_match,
    orbit,
)

TWO_PI = 2.0 * math.pi

DEPOSITS_HEADER = "tick,particle,x,y,source"
HISTOGRAM_HEADER = "bin_lo,bin_hi,count"
SWEEP_HEADER = "param,seed,NS,min_radius,max_radius,wall_ms"


class ConfigError(ValueError):
    """Rejected configuration input, with the offending line and key named."""


# ---------------------------------------------------------------------------
# configuration


@dataclass
class SimConfig:
    T: float
    N: int
    D: int
    symmetry: SymmetryKind
    seed: int = 0
    S: int = 1
    r: float = 1.0
    v: float = 1.0
    rule_probability: float = 1.0
    bins: int = 50
    image_width: int = 800
    x0: Optional[float] = None
    y0: Optional[float] = None
    theta0: Optional[float] = None
    x0_by_id: Dict[int, float] = field(default_factory=dict)
    y0_by_id: Dict[int, float] = field(default_factory=dict)
    theta0_by_id: Dict[int, float] = field(default_factory=dict)
    rule_overrides: Dict[int, SymmetryKind] = field(default_factory=dict)


def _u64(tok: str) -> int:
    value = int(tok)
    if not 0 <= value < 1 << 64:
        raise ValueError(f"must be an unsigned 64-bit integer, got {tok}")
    return value


def _int_at_least(minimum: int) -> Callable[[str], int]:
    def conv(tok: str) -> int:
        value = int(tok)
        if value < minimum:
            raise ValueError(f"must be an integer >= {minimum}, got {tok}")
        return value

    return conv


def _positive_float(tok: str) -> float:
    value = float(tok)
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"must be a positive finite number, got {tok}")
    return value


def _finite_float(tok: str) -> float:
    value = float(tok)
    if not math.isfinite(value):
        raise ValueError(f"must be a finite number, got {tok}")
    return value


def _probability(tok: str) -> float:
    value = float(tok)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"must lie in [0, 1], got {tok}")
    return value


def _symmetry_kind(tok: str) -> SymmetryKind:
    for kind in SymmetryKind:
        if kind.value == tok:
            return kind
    names = ", ".join(kind.value for kind in SymmetryKind)
    raise ValueError(f"must be one of {names}, got {tok!r}")


_SCALAR_KEYS: Dict[str, Callable[[str], object]] = {
    "seed": _u64,
    "T": _positive_float,
    "N": _int_at_least(1),
    "S": _int_at_least(1),
    "D": _int_at_least(1),
    "r": _positive_float,
    "v": _positive_float,
    "symmetry": _symmetry_kind,
    "rule_probability": _probability,
    "bins": _int_at_least(1),
    "image_width": _int_at_least(16),
    "x0": _finite_float,
    "y0": _finite_float,
    "theta0": _finite_float,
}

# dotted per-particle keys: base -> (config field, converter)
_INDEXED_KEYS: Dict[str, Tuple[str, Callable[[str], object]]] = {
    "x0": ("x0_by_id", _finite_float),
    "y0": ("y0_by_id", _finite_float),
    "theta0": ("theta0_by_id", _finite_float),
    "rule_override": ("rule_overrides", _symmetry_kind),
}

_REQUIRED_KEYS = ("T", "N", "D", "symmetry")


def parse_config(text: str) -> SimConfig:
    """Parse `key = value` lines into a validated SimConfig.

    ``#`` starts a comment. Unknown keys, repeated keys, malformed values and
    violated invariants are all errors naming the line and key. Per-particle
    values use a dotted suffix, e.g. ``theta0.2 = 0.5`` for particle 2.
    """
    scalars: Dict[str, object] = {}
    indexed: Dict[str, Dict[int, object]] = {name: {} for name in _INDEXED_KEYS}

    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, tok = stripped.partition("=")
        key = key.strip()
        tok = tok.strip()
        if not key:
            raise ConfigError(f"line {lineno}: missing key before '='")
        if not tok:
            raise ConfigError(f"line {lineno}: key '{key}' has no value")

        base, dot, suffix = key.partition(".")
        if dot:
            if base not in _INDEXED_KEYS:
                raise ConfigError(f"line {lineno}: unknown key '{key}'")
            try:
                pid = int(suffix)
            except ValueError:
                raise ConfigError(
                    f"line {lineno}: key '{key}': suffix must be a particle id"
                ) from None
            if pid < 0:
                raise ConfigError(f"line {lineno}: key '{key}': particle id must be >= 0")
            if pid in indexed[base]:
                raise ConfigError(f"line {lineno}: key '{key}' set more than once")
            _, conv = _INDEXED_KEYS[base]
            indexed[base][pid] = _convert(lineno, key, tok, conv)
        else:
            if key not in _SCALAR_KEYS:
                raise ConfigError(f"line {lineno}: unknown key '{key}'")
            if key in scalars:
                raise ConfigError(f"line {lineno}: key '{key}' set more than once")
            scalars[key] = _convert(lineno, key, tok, _SCALAR_KEYS[key])

    missing = [key for key in _REQUIRED_KEYS if key not in scalars]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")

    cfg = SimConfig(
        T=scalars["T"],
        N=scalars["N"],
        D=scalars["D"],
        symmetry=scalars["symmetry"],
    )
    for key, value in scalars.items():
        if key not in _REQUIRED_KEYS:
            setattr(cfg, key, value)
    cfg.x0_by_id = indexed["x0"]
    cfg.y0_by_id = indexed["y0"]
    cfg.theta0_by_id = indexed["theta0"]
    cfg.rule_overrides = indexed["rule_override"]

    for pid in sorted(set().union(*[set(m) for m in indexed.values()])):
        if pid >= cfg.N:
            raise ConfigError(f"per-particle key references particle {pid} but N = {cfg.N}")
    return cfg


def _convert(lineno: int, key: str, tok: str, conv: Callable[[str], object]) -> object:
    try:
        return conv(tok)
    except ValueError as exc:
        detail = str(exc)
        if "must" not in detail:
            detail = f"malformed value {tok!r}"
        raise ConfigError(f"line {lineno}: key '{key}': {detail}") from None


# ---------------------------------------------------------------------------
# simulation


@dataclass
class SimResult:
    config: SimConfig
    k: int
    dt: float
    particles: List[Particle]
    trajectories: List[Trajectory]
    index: VisitIndex
    deposits: List[Deposit]
    ns: int
    histogram: RadialHistogram


def build_particles(cfg: SimConfig, rng: Rng) -> List[Particle]:
    """Sample N particles from the rng, then apply any initial-condition pins.

    The rng stream is consumed identically whether or not pins are present
    (two position draws then one heading draw per particle, in id order), so
    pinning one particle never shifts the randomness of the others.
    """
    particles = []
    for i in range(cfg.N):
        px, py = rng.sample_disk(cfg.r)
        theta = TWO_PI * rng.next_unit()
        x_pin = cfg.x0_by_id.get(i, cfg.x0)
        y_pin = cfg.y0_by_id.get(i, cfg.y0)
        t_pin = cfg.theta0_by_id.get(i, cfg.theta0)
        if x_pin is not None:
            px = x_pin
        if y_pin is not None:
            py = y_pin
        if t_pin is not None:
            theta = t_pin
        if math.hypot(px, py) >= cfg.r:
            raise ConfigError(
                f"particle {i} would start at ({px:g}, {py:g}), outside the domain of radius {cfg.r:g}"
            )
        particles.append(Particle(id=i, eq=MovementEquation((px, py), theta, cfg.v)))
    return particles


def simulate(cfg: SimConfig) -> SimResult:
    """Full pipeline: init, ideal paths, quantization, index, rule, metrics."""
    rng = Rng(cfg.seed)
    dom = Domain(cfg.r)
    dt = 1.0 / (cfg.D * cfg.v)
    k = math.ceil(cfg.T * cfg.D * cfg.v)

    particles = build_particles(cfg, rng)
    trajectories = []
    for p in particles:
        ideal = ideal_path(p.eq, dom, k, dt)
        start = clamp_start_node((ideal[0, 0], ideal[0, 1]), cfg.D, dom)
        trajectories.append(quantize_trajectory(ideal, start, cfg.D, dom, particle=p.id))
    index = build_visit_index(trajectories)

    rule = RuleConfig(cfg.symmetry, cfg.rule_probability, cfg.rule_overrides)
    deposits = apply_rule(trajectories, index, rule, rng)
    histogram = radial_distribution(deposits, cfg.bins, dom, cfg.D)
    return SimResult(
        config=cfg,
        k=k,
        dt=dt,
        particles=particles,
        trajectories=trajectories,
        index=index,
        deposits=deposits,
        ns=ns_count(deposits),
        histogram=histogram,
    )


# ---------------------------------------------------------------------------
# serialization


def format_float(value: float) -> str:
    return f"{value:.9g}"


def deposits_csv(deposits: Sequence[Deposit], d: int) -> str:
    lines = [DEPOSITS_HEADER]
    for dep in deposits:
        x, y = node_position(dep.node, d)
        lines.append(
            f"{dep.tick},{dep.particle},{format_float(x)},{format_float(y)},{dep.source}"
        )
    return "\n".join(lines) + "\n"


def histogram_csv(hist: RadialHistogram) -> str:
    lines = [HISTOGRAM_HEADER]
    for lo, hi, count in hist.rows():
        lines.append(f"{format_float(lo)},{format_float(hi)},{count}")
    return "\n".join(lines) + "\n"


def read_deposits_csv(text: str) -> List[Tuple[int, int, float, float, str]]:
    lines = text.splitlines()
    if not lines or lines[0] != DEPOSITS_HEADER:
        raise ConfigError(f"deposit file must start with header '{DEPOSITS_HEADER}'")
    rows = []
    for lineno, line in enumerate(lines[1:], 2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise ConfigError(f"line {lineno}: expected 5 comma-separated fields")
        try:
            rows.append((int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3]), parts[4]))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    return rows


def render(points: Sequence[Position], cfg: SimConfig) -> str:
    """Plain PGM raster of deposit positions: white S x S squares on black.

    Pixel mapping sends x = -r to column 0 and x = +r to column W-1, with y
    increasing upward (row 0 is y = +r). Squares are clipped at the edges.
    """
    w = cfg.image_width
    if w < 16:
        raise ValueError(f"image width must be >= 16, got {w}")
    raster = np.zeros((w, w), dtype=np.uint8)
    span = 2.0 * cfg.r
    lo = (cfg.S - 1) // 2
    hi = cfg.S // 2
    for x, y in points:
        px = math.floor((x + cfg.r) / span * (w - 1))
        py = math.floor((cfg.r - y) / span * (w - 1))
        x0 = max(px - lo, 0)
        x1 = min(px + hi, w - 1)
        y0 = max(py - lo, 0)
        y1 = min(py + hi, w - 1)
        if x0 <= x1 and y0 <= y1:
            raster[y0 : y1 + 1, x0 : x1 + 1] = 255
    lines = ["P2", f"{w} {w}", "255"]
    for row in raster:
        lines.append(" ".join(map(str, row.tolist())))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def run(cfg: SimConfig, out_dir: Path) -> SimResult:
    started = time.perf_counter()
    result = simulate(cfg)
    wall_ms = (time.perf_counter() - started) * 1000.0

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "deposits.csv").write_bytes(deposits_csv(result.deposits, cfg.D).encode())
    (out_dir / "histogram.csv").write_bytes(histogram_csv(result.histogram).encode())
    points = [node_position(dep.node, cfg.D) for dep in result.deposits]
    (out_dir / "pattern.pgm").write_bytes(render(points, cfg).encode())
    summary = f"NS = {result.ns}\nK = {result.k}\nwall_ms = {wall_ms:.0f}\n"
    (out_dir / "summary.txt").write_text(summary)
    print(f"NS={result.ns} K={result.k} wall_ms={wall_ms:.0f} -> {out_dir}")
    return result


def sweep(
    cfg: SimConfig,
    vary_key: str,
    value_tokens: Sequence[str],
    seeds: Sequence[int],
    out_path: Path,
) -> str:
    """Cross product of one varied scalar key and a seed list, one row each."""
    if vary_key not in _SCALAR_KEYS:
        raise ConfigError(f"cannot vary unknown key '{vary_key}'")
    conv = _SCALAR_KEYS[vary_key]
    lines = [SWEEP_HEADER]
    for tok in value_tokens:
        try:
            value = conv(tok)
        except ValueError as exc:
            raise ConfigError(f"--vary {vary_key}: {exc}") from None
        for seed in seeds:
            variant = dataclasses.replace(cfg, **{vary_key: value})
            variant.seed = seed
            started = time.perf_counter()
            result = simulate(variant)
            wall_ms = (time.perf_counter() - started) * 1000.0
            if result.deposits:
                dists = [deposit_distance(dep, variant.D) for dep in result.deposits]
                lo, hi = format_float(min(dists)), format_float(max(dists))
            else:
                lo = hi = "nan"
            lines.append(f"{tok},{seed},{result.ns},{lo},{hi},{wall_ms:.0f}")
    table = "\n".join(lines) + "\n"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(table.encode())
    print(f"{len(lines) - 1} sweep rows -> {out_path}")
    return table


def stats(deposit_rows: Sequence[Tuple[int, int, float, float, str]], bins: int, radius: float) -> str:
    distances = [math.hypot(x, y) for _, _, x, y, _ in deposit_rows]
    hist = bin_distances(distances, bins, radius)
    return histogram_csv(hist)


# ---------------------------------------------------------------------------
# verify: self-contained oracle suite


def _random_quantizer_instance(rng: Rng, k: int, d: int) -> List[Position]:
    x, y = rng.sample_disk(0.5)
    samples = [(x, y)]
    h = 1.0 / d
    for _ in range(k):
        ang = TWO_PI * rng.next_unit()
        mag = h * rng.next_unit()
        x, y = x + mag * math.cos(ang), y + mag * math.sin(ang)
        samples.append((x, y))
    return samples


def _plan_is_walk(plan) -> bool:
    for t in range(plan.nodes.shape[0] - 1):
        di = abs(int(plan.nodes[t + 1, 0]) - int(plan.nodes[t, 0]))
        dj = abs(int(plan.nodes[t + 1, 1]) - int(plan.nodes[t, 1]))
        if max(di, dj) > 1:
            return False
    return True


def naive_find_match(
    trajectories: Sequence[Trajectory],
    particle: int,
    tick: int,
    node: Tuple[int, int],
    cfg: RuleConfig,
) -> Tuple[MatchEvent, ...]:
    """Reference matcher: scan every trajectory tick by tick, no index."""
    images = orbit(node, cfg.kind_for(particle))
    if not images:
        return ()
    events = []
    for img in images:
        best = None
        for traj in trajectories:
            for tp in range(tick, len(traj)):
                if traj.node_at(tp) == img and (tp, traj.particle) != (tick, particle):
                    cand = (tp, traj.particle)
                    if best is None or cand < best:
                        best = cand
                    break
        if best is None:
            return ()
        events.append(MatchEvent(particle, tick, best[1], best[0], img))
    return tuple(events)


def _verify_quantizer(report: List[str]) -> bool:
    rng = Rng(20260301)
    for case in range(20):
        k = 3 + case % 3
        d = 4 if case % 2 == 0 else 8
        samples = _random_quantizer_instance(rng, k, d)
        start = snap(samples[0], d)
        brute = brute_force_quantize(samples, start, d)
        opt = optimal_quantize(samples, start, d, window=4)
        greedy = greedy_quantize(samples, start, d)
        cost_b = plan_cost(brute, samples, d)
        cost_o = plan_cost(opt, samples, d)
        cost_g = plan_cost(greedy, samples, d)
        if cost_o != cost_b or cost_g < cost_o or not all(
            _plan_is_walk(p) for p in (brute, opt, greedy)
        ):
            report.append(
                f"FAIL solver-cross-oracle: case {case} d={d} start={start} "
                f"costs brute={cost_b!r} optimal={cost_o!r} greedy={cost_g!r} "
                f"samples={samples!r}"
            )
            return False
    report.append("PASS solver-cross-oracle (20 cases)")
    return True


def _verify_matcher(report: List[str]) -> bool:
    for inst in range(4):
        cfg = SimConfig(
            T=4.0,
            N=3,
            D=10,
            symmetry=SymmetryKind.MIRROR_Y if inst % 2 == 0 else SymmetryKind.FOURFOLD,
            seed=900 + inst,
        )
        result = simulate(cfg)
        rule = RuleConfig(cfg.symmetry)
        for traj in result.trajectories:
            for t in range(len(traj)):
                g = traj.node_at(t)
                fast = find_match(traj.particle, t, g, result.index, rule)
                slow = naive_find_match(result.trajectories, traj.particle, t, g, rule)
                if set(fast) != set(slow):
                    report.append(
                        f"FAIL matcher-equivalence: seed={cfg.seed} particle={traj.particle} "
                        f"tick={t} node={g} indexed={fast!r} naive={slow!r}"
                    )
                    return False
    report.append("PASS matcher-equivalence (4 instances)")
    return True


def _verify_closure(report: List[str]) -> bool:
    mirror_cfg = SimConfig(T=5.0, N=6, D=30, symmetry=SymmetryKind.MIRROR_Y, seed=7)
    nodes = {dep.node for dep in simulate(mirror_cfg).deposits}
    if nodes != {(-i, j) for i, j in nodes}:
        report.append("FAIL mirror-closure: deposit node set is not its own mirror image")
        return False
    four_cfg = SimConfig(T=5.0, N=6, D=30, symmetry=SymmetryKind.FOURFOLD, seed=7)
    nodes = {dep.node for dep in simulate(four_cfg).deposits}
    for i, j in nodes:
        if not {(-i, j), (i, -j), (-i, -j)} <= nodes:
            report.append(f"FAIL fourfold-closure: orbit of {(i, j)} not fully deposited")
            return False
    report.append("PASS symmetry-closure (2 runs)")
    return True


def verify() -> Tuple[bool, str]:
    """Deterministic self-check; returns (all passed, report text)."""
    report: List[str] = []
    ok = _verify_quantizer(report)
    ok = _verify_matcher(report) and ok
    ok = _verify_closure(report) and ok
    report.append("verify: OK" if ok else "verify: FAILED")
    return ok, "\n".join(report) + "\n"


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="switchsim",
        description="Deterministic lattice-switching particle simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one simulation and write its artifacts")
    p_run.add_argument("config", help="path to a key = value config file")
    p_run.add_argument("-o", "--out", required=True, help="output directory")

    p_sweep = sub.add_parser("sweep", help="vary one key across seeds")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--vary", required=True, metavar="KEY=V1,V2,...")
    p_sweep.add_argument("--seeds", required=True, metavar="S1,S2,...")
    p_sweep.add_argument("-o", "--out", required=True, help="output CSV path")

    p_render = sub.add_parser("render", help="render a deposits CSV to PGM")
    p_render.add_argument("deposits")
    p_render.add_argument("config")
    p_render.add_argument("-o", "--out", required=True, help="output PGM path")

    p_stats = sub.add_parser("stats", help="radial histogram of a deposits CSV")
    p_stats.add_argument("deposits")
    p_stats.add_argument("--bins", type=int, default=50)
    p_stats.add_argument("--radius", type=float, default=1.0)

    sub.add_parser("verify", help="run the built-in oracle suite")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1

    try:
        if args.command == "run":
            cfg = parse_config(Path(args.config).read_text())
            run(cfg, Path(args.out))
            return 0
        if args.command == "sweep":
            cfg = parse_config(Path(args.config).read_text())
            key, eq, values = args.vary.partition("=")
            if not eq or not values:
                raise ConfigError("--vary expects KEY=V1,V2,...")
            seeds = [_u64(tok) for tok in args.seeds.split(",") if tok]
            sweep(cfg, key.strip(), values.split(","), seeds, Path(args.out))
            return 0
        if args.command == "render":
            cfg = parse_config(Path(args.config).read_text())
            rows = read_deposits_csv(Path(args.deposits).read_text())
            points = [(x, y) for _, _, x, y, _ in rows]
            Path(args.out).write_bytes(render(points, cfg).encode())
            print(f"{len(points)} deposits -> {args.out}")
            return 0
        if args.command == "stats":
            rows = read_deposits_csv(Path(args.deposits).read_text())
            sys.stdout.write(stats(rows, args.bins, args.radius))
            return 0
        if args.command == "verify":
            ok, report = verify()
            sys.stdout.write(report)
            return 0 if ok else 2
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1  # pragma: no cover - unreachable with required=True


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

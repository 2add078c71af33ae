"""Command-line surface: graph generation, exact sweeps, simulation, CSV export.

Every run echoes its fully resolved configuration (including derived seeds
and realized node populations) into a '#'-prefixed provenance block at the
top of the output file; the CSV body below it is byte-reproducible for
identical resolved configurations.

Exit codes: 0 success, 2 configuration error, 3 numeric-regime condition
(e.g. a steady state requested for a law that has none: the equilibrium row
is still written, flagged accordingly).
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .graphs import (
    Graph,
    GraphError,
    barabasi_albert,
    complete_graph,
    dump_edge_list,
    load_edge_list,
    transition_matrix,
    watts_strogatz,
)
from .montecarlo import EstimateInconclusiveError, SimConfig, estimate, simulate_trajectory
from .montecarlo import EVENT_NAMES
from .firstpassage import kemeny, mfpt_matrix
from .propagator import RelocationVector, ness, propagate
from .renewal import DeterministicPeriod, FiniteSupport, Geometric, ResetLaw, Sibuya
from .survival import ergodicity_check, hitting_probability, kill, mfht, survival_series

COMMANDS = (
    "graph",
    "propagate",
    "ness",
    "mfpt-sweep",
    "kemeny-sweep",
    "mfht-sweep",
    "survival",
    "simulate",
)

# Sub-stream tags for the population draws and the simulator.
_RELOC_STREAM = 0x52
_TARGET_STREAM = 0x54
_SIM_STREAM = 0x53


class ConfigError(ValueError):
    """Unusable command-line/config-file input."""


class RegimeExit(RuntimeError):
    """Run completed but hit a numeric-regime condition (exit code 3)."""


@dataclass
class RunConfig:
    """Fully resolved run description; echoed into the provenance block."""

    command: str
    out: str
    graph: str = "cc:10"
    seed: int = 0
    law: str | None = None
    reloc: str | None = None
    targets: str | None = None
    pgrid: str | None = None
    agrid: str | None = None
    trials: int = 10_000
    horizon: int = 100
    start: int = 0
    statistic: str = "occupation"
    at: int | None = None
    pairs: str | None = None
    emit_edgelist: bool = False
    summary_out: str | None = None
    dump: str | None = None
    dump_trials: int = 1
    resolved: dict = field(default_factory=dict)

    def echo(self, key, value):
        self.resolved[str(key)] = str(value)


# ---------------------------------------------------------------------------
# spec parsing
# ---------------------------------------------------------------------------

def _split_spec(spec: str, what: str) -> tuple[str, str]:
    if ":" not in spec:
        raise ConfigError(f"malformed {what} spec {spec!r} (expected kind:args)")
    kind, _, args = spec.partition(":")
    return kind, args


def parse_graph_spec(spec: str, seed: int) -> Graph:
    kind, args = _split_spec(spec, "graph")
    try:
        if kind == "ws":
            n, m, pr = args.split(",")
            return watts_strogatz(int(n), int(m), float(pr), seed)
        if kind == "ba":
            n, m = args.split(",")
            return barabasi_albert(int(n), int(m), seed)
        if kind == "cc":
            return complete_graph(int(args))
        if kind == "edgelist":
            with open(args) as fh:
                return load_edge_list(fh.read())
    except (ValueError, OSError, GraphError) as exc:
        raise ConfigError(f"graph spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown graph kind {kind!r}")


def parse_law_spec(spec: str) -> ResetLaw:
    kind, args = _split_spec(spec, "law")
    try:
        if kind == "geom":
            return Geometric(float(args))
        if kind == "sibuya":
            return Sibuya(float(args))
        if kind == "finite":
            return FiniteSupport.from_csv(args)
        if kind == "period":
            return DeterministicPeriod(int(args))
    except (ValueError, OSError) as exc:
        raise ConfigError(f"law spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown law kind {kind!r}")


def _bernoulli_population(
    n: int, frac: float, seed: int, stream: int, forbid_full: bool
) -> np.ndarray:
    """Per-node Bernoulli draw of a node population; redraws (deterministic
    stream) until non-empty, and non-full when a proper subset is required."""
    if not 0.0 < frac <= 1.0:
        raise ConfigError("population fraction must lie in (0, 1]")
    rng = np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, stream]))
    for _ in range(1000):
        mask = rng.random(n) < frac
        if not mask.any():
            continue
        if forbid_full and mask.all():
            continue
        return np.flatnonzero(mask)
    raise ConfigError("could not draw a usable node population")


def parse_reloc_spec(spec: str, g: Graph, seed: int, cfg: RunConfig) -> RelocationVector:
    kind, args = _split_spec(spec, "reloc")
    if kind in ("uniform", "degree"):
        frac = float(args)
        nodes = (
            np.arange(g.n)
            if frac >= 1.0
            else _bernoulli_population(g.n, frac, seed, _RELOC_STREAM, forbid_full=False)
        )
        cfg.echo("reloc_stream", f"philox(key=[{seed},{_RELOC_STREAM}])")
        cfg.echo("r_nodes", ",".join(map(str, nodes.tolist())))
        if kind == "uniform":
            return RelocationVector.uniform(g.n, nodes)
        return RelocationVector.degree_proportional(g, nodes)
    if kind == "node":
        node = int(args)
        if not 0 <= node < g.n:
            raise ConfigError("relocation node out of range")
        cfg.echo("r_nodes", str(node))
        return RelocationVector.single(node, g.n)
    if kind == "vec":
        try:
            values = np.loadtxt(args, ndmin=1)
        except OSError as exc:
            raise ConfigError(f"reloc vector file {args!r}: {exc}") from exc
        if values.size != g.n:
            raise ConfigError("relocation vector length does not match the graph")
        vec = RelocationVector(values)
        cfg.echo("r_nodes", ",".join(map(str, vec.support.tolist())))
        return vec
    raise ConfigError(f"unknown reloc kind {kind!r}")


def parse_target_spec(spec: str, g: Graph, seed: int, cfg: RunConfig) -> tuple[int, ...]:
    kind, args = _split_spec(spec, "targets")
    if kind == "set":
        try:
            nodes = tuple(sorted({int(x) for x in args.split(",") if x != ""}))
        except ValueError as exc:
            raise ConfigError(f"target spec {spec!r}: {exc}") from exc
    elif kind == "frac":
        drawn = _bernoulli_population(
            g.n, float(args), seed, _TARGET_STREAM, forbid_full=True
        )
        cfg.echo("target_stream", f"philox(key=[{seed},{_TARGET_STREAM}])")
        nodes = tuple(drawn.tolist())
    else:
        raise ConfigError(f"unknown target kind {kind!r}")
    if not nodes or len(nodes) >= g.n:
        raise ConfigError("targets must form a non-empty proper subset of the nodes")
    if nodes[0] < 0 or nodes[-1] >= g.n:
        raise ConfigError("target ids out of range")
    cfg.echo("t_nodes", ",".join(map(str, nodes)))
    return nodes


def parse_grid(spec: str) -> np.ndarray:
    try:
        a, b, count = spec.split(":")
        grid = np.linspace(float(a), float(b), int(count))
    except ValueError as exc:
        raise ConfigError(f"grid spec {spec!r} (expected a:b:n): {exc}") from exc
    if grid.size < 1 or np.any(np.diff(grid) <= 0) and grid.size > 1:
        raise ConfigError("grid must be strictly increasing")
    if grid[0] <= 0.0 or grid[-1] >= 1.0:
        raise ConfigError("grid must lie strictly inside (0, 1)")
    return grid


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _format_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: str, header: list[str], rows, cfg: RunConfig) -> None:
    """RFC-4180-style CSV with a '#'-prefixed provenance block."""
    lines = [f"# resetwalk {__version__} (numpy {np.__version__})"]
    lines.append(f"# command = {cfg.command}")
    for key in ("graph", "seed", "law", "reloc", "targets", "pgrid", "agrid",
                "trials", "horizon", "start", "statistic", "at", "pairs"):
        value = getattr(cfg, key.replace("-", "_"))
        if value is not None:
            lines.append(f"# {key} = {value}")
    for key, value in cfg.resolved.items():
        lines.append(f"# {key} = {value}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_format_cell(cell) for cell in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_graph(cfg: RunConfig) -> None:
    g = parse_graph_spec(cfg.graph, cfg.seed)
    cfg.echo("n", g.n)
    cfg.echo("degree_sum", g.degree_sum)
    if cfg.emit_edgelist:
        body = dump_edge_list(g)
        lines = [f"# resetwalk {__version__} edge list",
                 f"# graph = {cfg.graph}", f"# seed = {cfg.seed}"]
        with open(cfg.out, "w") as fh:
            fh.write("\n".join(lines) + "\n" + body)
        return
    rows = [(i, int(g.degrees[i])) for i in range(g.n)]
    write_csv(cfg.out, ["node", "degree"], rows, cfg)


def _walk(cfg: RunConfig):
    g = parse_graph_spec(cfg.graph, cfg.seed)
    w = transition_matrix(g)
    return g, w


def _cmd_propagate(cfg: RunConfig) -> None:
    g, w = _walk(cfg)
    law = parse_law_spec(cfg.law)
    rel = parse_reloc_spec(cfg.reloc, g, cfg.seed, cfg)
    series = propagate(w, rel, law, cfg.horizon)
    rows = []
    for t in range(cfg.horizon + 1):
        matrix = series.at(t)
        for i in range(g.n):
            for j in range(g.n):
                rows.append((t, i, j, matrix[i, j]))
    write_csv(cfg.out, ["t", "i", "j", "p"], rows, cfg)


def _cmd_ness(cfg: RunConfig) -> None:
    g, w = _walk(cfg)
    law = parse_law_spec(cfg.law)
    rel = parse_reloc_spec(cfg.reloc, g, cfg.seed, cfg)
    steady = ness(w, rel, law, stationary=g.stationary_distribution())
    rows = [(j, steady.distribution[j], int(steady.exists)) for j in range(g.n)]
    write_csv(cfg.out, ["j", "p_infty", "ness_exists"], rows, cfg)
    if not steady.exists:
        raise RegimeExit("no steady state for this law; equilibrium row written")


def _parse_pairs(cfg: RunConfig, n: int) -> list[tuple[int, int]]:
    spec = cfg.pairs or f"0:{n - 1}"
    pairs = []
    for chunk in spec.split(","):
        i, _, j = chunk.partition(":")
        try:
            pair = (int(i), int(j))
        except ValueError as exc:
            raise ConfigError(f"bad pair {chunk!r}") from exc
        if not (0 <= pair[0] < n and 0 <= pair[1] < n):
            raise ConfigError(f"pair {chunk!r} out of range")
        pairs.append(pair)
    return pairs


def _cmd_mfpt_sweep(cfg: RunConfig) -> None:
    g, w = _walk(cfg)
    rel = parse_reloc_spec(cfg.reloc, g, cfg.seed, cfg)
    grid = parse_grid(cfg.pgrid or "0.05:0.95:19")
    pairs = _parse_pairs(cfg, g.n)
    stationary = g.stationary_distribution()
    header = ["p", "kemeny", "efficiency"] + [f"mfpt_{i}_{j}" for i, j in pairs]
    rows = []
    for p in grid:
        k, eff = kemeny(w, float(p))
        matrix = mfpt_matrix(w, rel, float(p), stationary=stationary)
        rows.append((p, k, eff, *[matrix[i, j] for i, j in pairs]))
    write_csv(cfg.out, header, rows, cfg)


def _cmd_kemeny_sweep(cfg: RunConfig) -> None:
    _, w = _walk(cfg)
    grid = parse_grid(cfg.pgrid or "0.05:0.95:19")
    rows = [(p, *kemeny(w, float(p))) for p in grid]
    write_csv(cfg.out, ["p", "kemeny", "efficiency"], rows, cfg)


def _cmd_mfht_sweep(cfg: RunConfig) -> None:
    g, w = _walk(cfg)
    rel = parse_reloc_spec(cfg.reloc, g, cfg.seed, cfg)
    targets = parse_target_spec(cfg.targets, g, cfg.seed, cfg)
    grid = parse_grid(cfg.agrid or "0.05:0.95:19")
    ks = kill(w, rel, targets)
    rows = []
    for alpha in grid:
        law = Sibuya(float(alpha))
        result = mfht(ks, law)
        regime = ergodicity_check(ks, law).classification
        for i in range(g.n):
            rows.append((alpha, i, result.per_start[i], result.global_mean, regime))
    write_csv(cfg.out, ["alpha", "start", "mfht", "global_mfht", "regime"], rows, cfg)


def _cmd_survival(cfg: RunConfig) -> None:
    g, w = _walk(cfg)
    law = parse_law_spec(cfg.law)
    rel = parse_reloc_spec(cfg.reloc, g, cfg.seed, cfg)
    targets = parse_target_spec(cfg.targets, g, cfg.seed, cfg)
    ks = kill(w, rel, targets)
    stats = survival_series(ks, law, cfg.horizon)
    rows = []
    for i in range(g.n):
        for t in range(cfg.horizon + 1):
            rows.append((i, t, stats.survival[i, t], stats.fht_pdf[i, t]))
    write_csv(cfg.out, ["i", "t", "survival", "fht_pdf"], rows, cfg)
    summary_path = cfg.summary_out or cfg.out + ".summary.csv"
    result = mfht(ks, law)
    hitting = hitting_probability(ks, law, cfg.horizon)
    summary = [
        (i, result.per_start[i], hitting.values[i], hitting.regime)
        for i in range(g.n)
    ]
    write_csv(summary_path, ["i", "mfht", "hitting_prob", "regime"], summary, cfg)


def _cmd_simulate(cfg: RunConfig) -> None:
    g, w = _walk(cfg)
    law = parse_law_spec(cfg.law)
    rel = parse_reloc_spec(cfg.reloc, g, cfg.seed, cfg)
    targets = ()
    if cfg.targets:
        targets = parse_target_spec(cfg.targets, g, cfg.seed, cfg)
    sim_seed = (cfg.seed ^ (_SIM_STREAM << 56)) & 0xFFFFFFFFFFFFFFFF
    cfg.echo("sim_seed", sim_seed)
    sim = SimConfig(
        w=w, start=cfg.start, horizon=cfg.horizon, trials=cfg.trials,
        seed=sim_seed, law=law, relocation=rel, targets=targets,
    )
    at = cfg.at or cfg.horizon
    if cfg.statistic == "occupation":
        result = estimate(sim, "occupation", t=at)
        rows = [
            (j, result.value[j], result.standard_error[j]) for j in range(g.n)
        ]
        write_csv(cfg.out, ["node", "estimate", "standard_error"], rows, cfg)
    elif cfg.statistic == "survival":
        result = estimate(sim, "survival", t=at)
        rows = [(at, result.value, result.standard_error)]
        write_csv(cfg.out, ["t", "estimate", "standard_error"], rows, cfg)
    elif cfg.statistic in ("mfht", "mfpt"):
        try:
            result = estimate(sim, "mfht")
        except EstimateInconclusiveError as exc:
            raise RegimeExit(str(exc)) from exc
        rows = [
            (cfg.start, result.value, result.standard_error, result.censored,
             result.trials)
        ]
        write_csv(
            cfg.out,
            ["start", "estimate", "standard_error", "censored", "trials"],
            rows, cfg,
        )
    else:
        raise ConfigError(f"unknown statistic {cfg.statistic!r}")
    if cfg.dump:
        dump_rows = []
        for trial in range(min(cfg.dump_trials, cfg.trials)):
            trajectory = simulate_trajectory(sim, trial)
            for t in range(1, trajectory.positions.size):
                dump_rows.append(
                    (trial, t, int(trajectory.positions[t]),
                     EVENT_NAMES[int(trajectory.events[t])])
                )
        out, cfg.out = cfg.out, cfg.dump
        try:
            write_csv(cfg.dump, ["trial", "t", "node", "event"], dump_rows, cfg)
        finally:
            cfg.out = out


_HANDLERS = {
    "graph": _cmd_graph,
    "propagate": _cmd_propagate,
    "ness": _cmd_ness,
    "mfpt-sweep": _cmd_mfpt_sweep,
    "kemeny-sweep": _cmd_kemeny_sweep,
    "mfht-sweep": _cmd_mfht_sweep,
    "survival": _cmd_survival,
    "simulate": _cmd_simulate,
}


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resetwalk",
        description="Random walks with stochastic resetting on finite networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value file; flags override it")
        p.add_argument("--graph", help="ws:N,m,pr | ba:N,m | cc:N | edgelist:PATH")
        p.add_argument("--seed", type=int)
        p.add_argument("--law", help="geom:p | sibuya:a | finite:PATH | period:T")
        p.add_argument("--reloc", help="uniform:frac | degree:frac | node:i | vec:PATH")
        p.add_argument("--targets", help="set:i,j,... | frac:x")
        p.add_argument("--pgrid", help="a:b:n sweep grid for the reset probability")
        p.add_argument("--agrid", help="a:b:n sweep grid for the tail exponent")
        p.add_argument("--out", help="output CSV path")
        p.add_argument("--trials", type=int)
        p.add_argument("--horizon", type=int)
        p.add_argument("--start", type=int)
        p.add_argument("--statistic", choices=["occupation", "survival", "mfht", "mfpt"])
        p.add_argument("--at", type=int, help="observation time for occupation/survival")
        p.add_argument("--pairs", help="i:j[,i:j...] start:target pairs for mfpt-sweep")
        p.add_argument("--emit-edgelist", action="store_true", default=None)
        p.add_argument("--summary-out")
        p.add_argument("--dump", help="trajectory dump CSV path (simulate)")
        p.add_argument("--dump-trials", type=int)
    return parser


def _read_config_file(path: str) -> dict[str, str]:
    table = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value")
                key, _, value = line.partition("=")
                table[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise ConfigError(f"config file {path!r}: {exc}") from exc
    return table


_INT_KEYS = {"seed", "trials", "horizon", "start", "at", "dump_trials"}
_BOOL_KEYS = {"emit_edgelist"}


def _resolve(args: argparse.Namespace) -> RunConfig:
    table = _read_config_file(args.config) if args.config else {}
    cfg = RunConfig(command=args.command, out="")
    for key in ("graph", "seed", "law", "reloc", "targets", "pgrid", "agrid",
                "out", "trials", "horizon", "start", "statistic", "at", "pairs",
                "emit_edgelist", "summary_out", "dump", "dump_trials"):
        value = getattr(args, key)
        if value is None and key in table:
            raw = table[key]
            if key in _INT_KEYS:
                value = int(raw)
            elif key in _BOOL_KEYS:
                value = raw.lower() in ("1", "true", "yes")
            else:
                value = raw
        if value is not None:
            setattr(cfg, key, value)
    if not cfg.out:
        raise ConfigError("--out is required")
    needs_law = cfg.command in ("propagate", "ness", "survival", "simulate")
    if needs_law and not cfg.law:
        raise ConfigError(f"{cfg.command} requires --law")
    needs_reloc = cfg.command in (
        "propagate", "ness", "mfpt-sweep", "mfht-sweep", "survival", "simulate"
    )
    if needs_reloc and not cfg.reloc:
        raise ConfigError(f"{cfg.command} requires --reloc")
    if cfg.command in ("mfht-sweep", "survival") and not cfg.targets:
        raise ConfigError(f"{cfg.command} requires --targets")
    return cfg


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
        _HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RegimeExit as exc:
        print(f"regime: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

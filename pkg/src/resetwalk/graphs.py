"""Finite undirected networks and their one-step transition matrices.

Graphs are stored densely (adjacency as a 0/1 matrix); every formula
downstream needs matrix inverses or eigenpairs, so sparse storage buys
nothing at the sizes we target (up to a few thousand nodes).

Random realizations (Watts-Strogatz, Barabasi-Albert) are driven by the
counter-based Philox PRNG keyed explicitly on the user seed, so identical
(model, seed) pairs reproduce identical adjacency matrices on any platform.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Graph",
    "GraphDiagnostics",
    "GraphError",
    "EdgeListParseError",
    "GraphValidationError",
    "load_edge_list",
    "dump_edge_list",
    "validate",
    "transition_matrix",
    "watts_strogatz",
    "barabasi_albert",
    "complete_graph",
    "generate_graph",
]

MAX_GENERATION_RETRIES = 100


class GraphError(Exception):
    """Base class for graph construction problems."""


class EdgeListParseError(GraphError):
    """Malformed edge-list input (bad tokens, self-loop lines)."""


class GraphValidationError(GraphError):
    """Structurally invalid network (disconnected, bipartite, isolated node)."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes 0..n-1.

    The adjacency matrix must be symmetric and 0/1 with an empty diagonal;
    every node needs at least one neighbor.  Connectivity and
    non-bipartiteness are *not* enforced here (``validate`` reports them);
    the loaders and generators below reject graphs failing either.
    """

    adjacency: np.ndarray
    degrees: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        adj = np.asarray(self.adjacency)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise GraphValidationError("adjacency must be a square matrix")
        if adj.shape[0] < 1:
            raise GraphValidationError("graph needs at least one node")
        adj = adj.astype(np.int64, copy=True)
        if not np.array_equal(adj, adj.T):
            raise GraphValidationError("adjacency must be symmetric")
        if np.any(np.diag(adj) != 0):
            raise GraphValidationError("self-loops are not allowed")
        if not np.isin(adj, (0, 1)).all():
            raise GraphValidationError("adjacency entries must be 0 or 1")
        degrees = adj.sum(axis=1)
        if np.any(degrees < 1):
            isolated = int(np.flatnonzero(degrees < 1)[0])
            raise GraphValidationError(f"isolated node {isolated}")
        adj.setflags(write=False)
        degrees.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "degrees", degrees)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def degree_sum(self) -> int:
        return int(self.degrees.sum())

    def stationary_distribution(self) -> np.ndarray:
        """Equilibrium occupation K_j / sum(K) of the reset-free walk."""
        return self.degrees / self.degree_sum

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency))
        return list(zip(i.tolist(), j.tolist()))


@dataclass(frozen=True)
class GraphDiagnostics:
    connected: bool
    bipartite: bool
    aperiodic: bool


def validate(g: Graph) -> GraphDiagnostics:
    """Report connectivity, bipartiteness and aperiodicity of ``g``.

    For undirected simple graphs the walk is aperiodic exactly when the
    graph is connected and carries an odd closed walk, i.e. is not
    bipartite.
    """
    n = g.n
    color = np.full(n, -1, dtype=np.int8)
    color[0] = 0
    queue = deque([0])
    bipartite = True
    visited = 1
    adj = g.adjacency
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u]):
            if color[v] == -1:
                color[v] = 1 - color[u]
                visited += 1
                queue.append(int(v))
            elif color[v] == color[u]:
                bipartite = False
    connected = visited == n
    return GraphDiagnostics(
        connected=connected,
        bipartite=bipartite,
        aperiodic=connected and not bipartite,
    )


def _require_valid(g: Graph) -> Graph:
    diag = validate(g)
    if not diag.connected:
        raise GraphValidationError("graph is not connected")
    if diag.bipartite:
        raise GraphValidationError("graph is bipartite (walk would be periodic)")
    return g


def transition_matrix(g: Graph) -> np.ndarray:
    """Row-stochastic one-step matrix W with W[i, j] = A[i, j] / K[i]."""
    _require_valid(g)
    return g.adjacency / g.degrees[:, None]


# ---------------------------------------------------------------------------
# edge-list I/O
# ---------------------------------------------------------------------------

def load_edge_list(text: str) -> Graph:
    """Parse a whitespace-separated edge list into a validated graph.

    One edge per line as two non-negative integers; lines starting with
    '#' are ignored; duplicate edges collapse.  Node ids are compacted to
    a dense 0-based range.  Self-loop lines are a parse error; the
    resulting graph must be connected and non-bipartite.
    """
    edges: set[tuple[int, int]] = set()
    ids: set[int] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise EdgeListParseError(f"line {lineno}: expected two node ids, got {raw!r}")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise EdgeListParseError(f"line {lineno}: non-integer node id in {raw!r}") from exc
        if a < 0 or b < 0:
            raise EdgeListParseError(f"line {lineno}: negative node id in {raw!r}")
        if a == b:
            raise EdgeListParseError(f"line {lineno}: self-loop {a}")
        edges.add((min(a, b), max(a, b)))
        ids.update((a, b))
    if not edges:
        raise EdgeListParseError("edge list contains no edges")
    compact = {node: k for k, node in enumerate(sorted(ids))}
    n = len(compact)
    adj = np.zeros((n, n), dtype=np.int64)
    for a, b in edges:
        adj[compact[a], compact[b]] = 1
        adj[compact[b], compact[a]] = 1
    return _require_valid(Graph(adj))


def dump_edge_list(g: Graph) -> str:
    """Inverse of ``load_edge_list`` (modulo comments): one edge per line."""
    return "\n".join(f"{i} {j}" for i, j in g.edges()) + "\n"


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _rng(seed: int, attempt: int) -> np.random.Generator:
    # Philox is counter-based; keying on (seed, attempt) gives independent,
    # platform-stable streams for the retry loop.
    return np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, attempt]))


def _watts_strogatz_once(n: int, m: int, rewire_prob: float, rng: np.random.Generator) -> np.ndarray:
    adj = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(1, m + 1):
            k = (i + j) % n
            adj[i, k] = adj[k, i] = 1
    # Rewire each original ring edge (i, i+j) with probability rewire_prob,
    # avoiding self-loops and duplicate links, as in the classic recipe.
    for j in range(1, m + 1):
        for i in range(n):
            k = (i + j) % n
            if rng.random() >= rewire_prob:
                continue
            candidates = np.flatnonzero(adj[i] == 0)
            candidates = candidates[candidates != i]
            if candidates.size == 0:
                continue
            w = int(candidates[rng.integers(candidates.size)])
            adj[i, k] = adj[k, i] = 0
            adj[i, w] = adj[w, i] = 1
    return adj


def _barabasi_albert_once(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    adj = np.zeros((n, n), dtype=np.int64)
    core = m + 1
    for i in range(core):
        for j in range(i + 1, core):
            adj[i, j] = adj[j, i] = 1
    # One entry per edge endpoint: uniform choice over this list is
    # degree-proportional attachment.
    repeated: list[int] = [i for i in range(core) for _ in range(core - 1)]
    for new in range(core, n):
        chosen: set[int] = set()
        while len(chosen) < m:
            cand = repeated[int(rng.integers(len(repeated)))]
            chosen.add(cand)
        for tgt in chosen:
            adj[new, tgt] = adj[tgt, new] = 1
            repeated.append(tgt)
            repeated.append(new)
    return adj


def watts_strogatz(n: int, m: int, rewire_prob: float, seed: int) -> Graph:
    """Ring of ``n`` nodes with ``m`` neighbors per side (degree 2m) and
    per-edge rewiring with probability ``rewire_prob``.

    Invalid realizations (disconnected or bipartite) are regenerated with a
    derived sub-seed, up to MAX_GENERATION_RETRIES attempts.
    """
    if n < 3:
        raise ValueError("watts_strogatz requires n >= 3")
    if m < 1 or 2 * m >= n:
        raise ValueError("watts_strogatz requires 1 <= m and 2m < n")
    if not 0.0 <= rewire_prob <= 1.0:
        raise ValueError("rewire_prob must lie in [0, 1]")
    return _generate_with_retries(
        lambda rng: _watts_strogatz_once(n, m, rewire_prob, rng), seed
    )


def barabasi_albert(n: int, m: int, seed: int) -> Graph:
    """Preferential-attachment growth from a complete core of m+1 nodes,
    attaching m edges per new node."""
    if n < 3:
        raise ValueError("barabasi_albert requires n >= 3")
    if m < 1 or m >= n:
        raise ValueError("barabasi_albert requires 1 <= m < n")
    if m + 1 > n:
        raise ValueError("barabasi_albert core exceeds n")
    return _generate_with_retries(lambda rng: _barabasi_albert_once(n, m, rng), seed)


def complete_graph(n: int) -> Graph:
    """A[i, j] = 1 - delta_ij; every node is connected to every other one."""
    if n < 3:
        raise ValueError("complete_graph requires n >= 3")
    adj = np.ones((n, n), dtype=np.int64) - np.eye(n, dtype=np.int64)
    return Graph(adj)


def _generate_with_retries(build, seed: int) -> Graph:
    for attempt in range(MAX_GENERATION_RETRIES):
        adj = build(_rng(seed, attempt))
        try:
            return _require_valid(Graph(adj))
        except GraphValidationError:
            continue
    raise GraphValidationError(
        f"no valid realization after {MAX_GENERATION_RETRIES} attempts (seed {seed})"
    )


def generate_graph(model: str, seed: int = 0, **params) -> Graph:
    """Dispatch on model name: 'watts_strogatz', 'barabasi_albert', 'complete'."""
    if model == "watts_strogatz":
        return watts_strogatz(params["n"], params["m"], params["rewire_prob"], seed)
    if model == "barabasi_albert":
        return barabasi_albert(params["n"], params["m"], seed)
    if model == "complete":
        return complete_graph(params["n"])
    raise ValueError(f"unknown graph model {model!r}")

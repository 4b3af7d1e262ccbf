"""Communication graphs: constructors, temporal models, distances, weights.

All graphs are undirected, carry an explicit self-loop on every node
(a client is always its own neighbor), and are represented by a boolean
adjacency matrix. Node indices are 0-based in code; the edge-list text
format is 1-based.
"""

from __future__ import annotations

import io
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Graph",
    "GraphError",
    "UNREACHABLE",
    "make_complete_graph",
    "make_path_graph",
    "make_disconnected_clique_graph",
    "make_two_expander_graph",
    "sample_er_graph",
    "sample_random_connected_graph",
    "is_connected",
    "set_distance",
    "metropolis_weights",
    "check_weight_matrix",
    "StaticGraph",
    "ErdosRenyiModel",
    "RandomConnectedModel",
    "PeriodicUnionModel",
    "graph_to_edge_list",
    "graph_from_edge_list",
]


class GraphError(ValueError):
    """Invalid graph construction or query."""


#: Distance reported by :func:`set_distance` when no path exists.
UNREACHABLE = math.inf


@dataclass(frozen=True)
class Graph:
    """Undirected graph over nodes 0..M-1 with a true diagonal.

    The adjacency matrix is boolean, symmetric, and has every diagonal
    entry set (each node is its own neighbor).
    """

    adjacency: np.ndarray

    def __post_init__(self) -> None:
        adj = np.asarray(self.adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise GraphError(f"adjacency must be square, got shape {adj.shape}")
        if adj.shape[0] < 1:
            raise GraphError("graph needs at least one node")
        if not np.array_equal(adj, adj.T):
            raise GraphError("adjacency must be symmetric")
        if not adj.diagonal().all():
            raise GraphError("adjacency diagonal must be all true")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @property
    def node_count(self) -> int:
        return self.adjacency.shape[0]

    def neighbors(self, m: int, include_self: bool = True) -> np.ndarray:
        """Sorted neighbor indices of node m (self included by default)."""
        row = self.adjacency[m].copy()
        if not include_self:
            row[m] = False
        return np.flatnonzero(row)

    def degrees(self) -> np.ndarray:
        """Off-diagonal degree of every node."""
        return self.adjacency.sum(axis=1) - 1

    def edges(self) -> list[tuple[int, int]]:
        """Off-diagonal edges as sorted (i, j) pairs with i < j."""
        i, j = np.nonzero(np.triu(self.adjacency, k=1))
        return list(zip(i.tolist(), j.tolist()))

    def edge_count(self) -> int:
        return int(np.triu(self.adjacency, k=1).sum())


def _empty_adjacency(M: int) -> np.ndarray:
    adj = np.zeros((M, M), dtype=bool)
    np.fill_diagonal(adj, True)
    return adj


def make_complete_graph(M: int) -> Graph:
    """Complete graph on M nodes."""
    if M < 1:
        raise GraphError(f"M must be >= 1, got {M}")
    return Graph(np.ones((M, M), dtype=bool))


def make_path_graph(M: int) -> Graph:
    """Path 0-1-...-(M-1); diameter M-1."""
    if M < 1:
        raise GraphError(f"M must be >= 1, got {M}")
    adj = _empty_adjacency(M)
    idx = np.arange(M - 1)
    adj[idx, idx + 1] = True
    adj[idx + 1, idx] = True
    return Graph(adj)


def make_disconnected_clique_graph(M: int, Q: int) -> Graph:
    """Two components: a clique on nodes 0..Q-1 and a complete graph on the rest.

    No edge crosses the two sets, so the graph is disconnected.
    """
    if not 1 <= Q < M:
        raise GraphError(f"need 1 <= Q < M, got M={M}, Q={Q}")
    adj = _empty_adjacency(M)
    adj[:Q, :Q] = True
    adj[Q:, Q:] = True
    return Graph(adj)


def make_two_expander_graph(M: int, eta: float) -> tuple[Graph, frozenset[int], frozenset[int]]:
    """Dumbbell: two cliques of size M/4 joined by a path of the middle M/2 nodes.

    Returns the graph plus the two end sets I0 (first M/4 nodes) and I1
    (last M/4 nodes). The hop distance between the sets is M/2 + 1, which
    dominates ceil(eta*M/8) for every eta in (0, 4].
    """
    if M < 4 or M % 4 != 0:
        raise GraphError(f"M must be a positive multiple of 4, got {M}")
    if not 0 < eta <= 4:
        raise GraphError(f"eta must be in (0, 4], got {eta}")
    q = M // 4
    adj = _empty_adjacency(M)
    adj[:q, :q] = True            # left clique
    adj[3 * q:, 3 * q:] = True    # right clique
    mids = np.arange(q, 3 * q - 1)
    adj[mids, mids + 1] = True    # middle path
    adj[mids + 1, mids] = True
    adj[q - 1, q] = adj[q, q - 1] = True              # bridge into the path
    adj[3 * q - 1, 3 * q] = adj[3 * q, 3 * q - 1] = True
    g = Graph(adj)
    i0 = frozenset(range(q))
    i1 = frozenset(range(3 * q, M))
    required = math.ceil(eta * M / 8)
    if set_distance(g, i0, i1) < required:
        raise GraphError(f"constructed distance below ceil(eta*M/8) = {required}")
    return g, i0, i1


def sample_er_graph(M: int, c: float, rng: np.random.Generator) -> Graph:
    """Erdos-Renyi sample: each off-diagonal pair present independently w.p. c."""
    if M < 1:
        raise GraphError(f"M must be >= 1, got {M}")
    if not 0 <= c <= 1:
        raise GraphError(f"edge probability must be in [0, 1], got {c}")
    u = rng.random((M, M))
    upper = np.triu(u < c, k=1)
    adj = upper | upper.T
    np.fill_diagonal(adj, True)
    return Graph(adj)


def sample_random_connected_graph(M: int, c: float, rng: np.random.Generator) -> Graph:
    """Connected sample: a uniform random spanning tree plus extra edges w.p. c.

    The tree is drawn by the Aldous-Broder random walk (first-entrance
    edges of a walk on the complete graph form a uniform spanning tree),
    then every non-tree pair is added independently with probability c.
    Connectivity holds by construction.
    """
    if M < 2:
        raise GraphError(f"M must be >= 2, got {M}")
    if not 0 <= c <= 1:
        raise GraphError(f"edge probability must be in [0, 1], got {c}")
    adj = _empty_adjacency(M)
    # Aldous-Broder walk on the complete graph.
    current = int(rng.integers(M))
    visited = np.zeros(M, dtype=bool)
    visited[current] = True
    remaining = M - 1
    while remaining:
        step = int(rng.integers(M - 1))
        nxt = step if step < current else step + 1
        if not visited[nxt]:
            visited[nxt] = True
            remaining -= 1
            adj[current, nxt] = adj[nxt, current] = True
        current = nxt
    if c > 0:
        u = rng.random((M, M))
        extra = np.triu(u < c, k=1)
        extra |= extra.T
        adj |= extra
        np.fill_diagonal(adj, True)
    return Graph(adj)


def is_connected(g: Graph) -> bool:
    """True iff one BFS component covers all nodes."""
    M = g.node_count
    seen = np.zeros(M, dtype=bool)
    seen[0] = True
    frontier = np.zeros(M, dtype=bool)
    frontier[0] = True
    while frontier.any():
        reach = g.adjacency[frontier].any(axis=0) & ~seen
        seen |= reach
        frontier = reach
    return bool(seen.all())


def set_distance(g: Graph, A, B) -> int | float:
    """Minimum hop count between node sets A and B; 0 if they intersect.

    Returns :data:`UNREACHABLE` when no path exists.
    """
    a = sorted(set(int(x) for x in A))
    b = set(int(x) for x in B)
    if not a or not b:
        raise GraphError("set_distance needs nonempty node sets")
    M = g.node_count
    for x in list(a) + sorted(b):
        if not 0 <= x < M:
            raise GraphError(f"node {x} out of range for M={M}")
    if b.intersection(a):
        return 0
    dist = 0
    seen = np.zeros(M, dtype=bool)
    seen[a] = True
    frontier = seen.copy()
    targets = np.zeros(M, dtype=bool)
    targets[sorted(b)] = True
    while frontier.any():
        dist += 1
        reach = g.adjacency[frontier].any(axis=0) & ~seen
        if (reach & targets).any():
            return dist
        seen |= reach
        frontier = reach
    return UNREACHABLE


def metropolis_weights(g: Graph) -> np.ndarray:
    """Symmetric doubly stochastic weights supported on the graph.

    W_ij = 1 / (1 + max(deg_i, deg_j)) for each edge (i != j), and the
    diagonal absorbs the remainder so each row sums to one. Degrees do not
    count the self-loop.
    """
    M = g.node_count
    deg = g.degrees().astype(float)
    W = np.zeros((M, M))
    off = g.adjacency & ~np.eye(M, dtype=bool)
    pair_deg = np.maximum.outer(deg, deg)
    W[off] = 1.0 / (1.0 + pair_deg[off])
    np.fill_diagonal(W, 1.0 - W.sum(axis=1))
    return W


def check_weight_matrix(W: np.ndarray, g: Graph, tol: float = 1e-12) -> None:
    """Raise unless W is symmetric, doubly stochastic to tol, and edge-supported."""
    if W.shape != (g.node_count, g.node_count):
        raise GraphError(f"weight matrix shape {W.shape} does not match graph")
    if not np.allclose(W, W.T, atol=tol):
        raise GraphError("weight matrix is not symmetric")
    if np.abs(W.sum(axis=1) - 1.0).max() > tol:
        raise GraphError("weight matrix rows do not sum to 1")
    if np.abs(W.sum(axis=0) - 1.0).max() > tol:
        raise GraphError("weight matrix columns do not sum to 1")
    if ((W > 0) & ~g.adjacency).any():
        raise GraphError("weight matrix has mass off the graph's edges")


# ---------------------------------------------------------------------------
# Temporal graph models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StaticGraph:
    """Stationary model: the same graph at every step."""

    graph: Graph
    kind: str = field(default="static", init=False)

    @property
    def node_count(self) -> int:
        return self.graph.node_count

    @property
    def is_static(self) -> bool:
        return True

    def graph_at(self, t: int, rng: np.random.Generator) -> Graph:
        return self.graph


@dataclass(frozen=True)
class ErdosRenyiModel:
    """A fresh Erdos-Renyi sample with edge probability c at every step."""

    M: int
    c: float
    kind: str = field(default="erdos_renyi", init=False)

    def __post_init__(self) -> None:
        if self.M < 1:
            raise GraphError(f"M must be >= 1, got {self.M}")
        if not 0 <= self.c <= 1:
            raise GraphError(f"edge probability must be in [0, 1], got {self.c}")

    @property
    def node_count(self) -> int:
        return self.M

    @property
    def is_static(self) -> bool:
        return False

    def graph_at(self, t: int, rng: np.random.Generator) -> Graph:
        return sample_er_graph(self.M, self.c, rng)


@dataclass(frozen=True)
class RandomConnectedModel:
    """A fresh random connected graph (tree + extra edges w.p. c) at every step."""

    M: int
    c: float
    kind: str = field(default="random_connected", init=False)

    def __post_init__(self) -> None:
        if self.M < 2:
            raise GraphError(f"M must be >= 2, got {self.M}")
        if not 0 <= self.c <= 1:
            raise GraphError(f"edge probability must be in [0, 1], got {self.c}")

    @property
    def node_count(self) -> int:
        return self.M

    @property
    def is_static(self) -> bool:
        return False

    def graph_at(self, t: int, rng: np.random.Generator) -> Graph:
        return sample_random_connected_graph(self.M, self.c, rng)


@dataclass(frozen=True)
class PeriodicUnionModel:
    """Deterministic cycle through a graph list whose B-step unions are connected.

    Construction checks that the union of every window of `window` consecutive
    graphs (cyclically) is connected, so any run sees a connected union every
    `window` steps.
    """

    graphs: tuple[Graph, ...]
    window: int
    kind: str = field(default="periodic_union", init=False)

    def __post_init__(self) -> None:
        if not self.graphs:
            raise GraphError("need at least one graph")
        M = self.graphs[0].node_count
        if any(g.node_count != M for g in self.graphs):
            raise GraphError("all graphs must share the node count")
        if not 1 <= self.window:
            raise GraphError(f"window must be >= 1, got {self.window}")
        n = len(self.graphs)
        for start in range(n):
            union = np.zeros((M, M), dtype=bool)
            for k in range(self.window):
                union |= self.graphs[(start + k) % n].adjacency
            if not is_connected(Graph(union)):
                raise GraphError(
                    f"union of the {self.window} graphs starting at phase {start} is not connected"
                )
        object.__setattr__(self, "graphs", tuple(self.graphs))

    @property
    def node_count(self) -> int:
        return self.graphs[0].node_count

    @property
    def is_static(self) -> bool:
        return len(self.graphs) == 1

    def graph_at(self, t: int, rng: np.random.Generator) -> Graph:
        return self.graphs[(t - 1) % len(self.graphs)]


# ---------------------------------------------------------------------------
# Serialization: edge-list text, 1-indexed, deterministic order
# ---------------------------------------------------------------------------


def graph_to_edge_list(g: Graph) -> str:
    """Serialize: first line M, then one 'i j' pair per line (1-based, i < j)."""
    out = io.StringIO()
    out.write(f"{g.node_count}\n")
    for i, j in g.edges():
        out.write(f"{i + 1} {j + 1}\n")
    return out.getvalue()


def graph_from_edge_list(text: str) -> Graph:
    """Parse the edge-list text format produced by :func:`graph_to_edge_list`."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise GraphError("empty edge-list text")
    M = int(lines[0])
    adj = _empty_adjacency(M)
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise GraphError(f"malformed edge line: {ln!r}")
        i, j = int(parts[0]) - 1, int(parts[1]) - 1
        if not (0 <= i < M and 0 <= j < M):
            raise GraphError(f"edge ({i + 1}, {j + 1}) out of range for M={M}")
        adj[i, j] = adj[j, i] = True
    return Graph(adj)

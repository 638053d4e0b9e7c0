"""Social graphs for the dynamics: ring lattices, small worlds, edge lists."""
from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ConstructionFailed,
    DisconnectedGraphWarning,
    DuplicateEdge,
    InvalidDegree,
    ParseError,
    SelfLoop,
)

__all__ = [
    "Graph",
    "NetworkSpec",
    "make_regular_ring",
    "make_complete",
    "make_small_world",
    "load_edge_list",
    "write_edge_list",
]

MAX_RETRIES = 100


class Graph:
    """Immutable simple undirected graph on nodes ``0..n-1``.

    Adjacency is stored as sorted neighbour tuples and mirrored in CSR form
    (``indptr``, ``indices``) for the kernels.
    """

    __slots__ = ("n", "adjacency", "kind", "connected", "indptr", "indices", "degrees")

    def __init__(self, n: int, adjacency, kind: str = "custom"):
        adjacency = tuple(tuple(sorted(int(v) for v in nbrs)) for nbrs in adjacency)
        if len(adjacency) != n:
            raise ValueError(f"adjacency has {len(adjacency)} rows for n={n}")
        for u, nbrs in enumerate(adjacency):
            if u in nbrs:
                raise SelfLoop(f"self-loop at node {u}")
            if len(set(nbrs)) != len(nbrs):
                raise DuplicateEdge(f"duplicate edge at node {u}")
            for v in nbrs:
                if not 0 <= v < n or u not in adjacency[v]:
                    raise ValueError(f"adjacency not symmetric at edge ({u}, {v})")
        degrees = np.fromiter((len(a) for a in adjacency), dtype=np.int64, count=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(degrees, out=indptr[1:])
        indices = np.fromiter((v for a in adjacency for v in a), dtype=np.int64, count=int(indptr[-1]))
        for arr in (degrees, indptr, indices):
            arr.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "adjacency", adjacency)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "degrees", degrees)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "connected", _bfs_connected(adjacency))

    def __setattr__(self, name, value):
        raise AttributeError("Graph is immutable")

    def __reduce__(self):
        return (Graph, (self.n, self.adjacency, self.kind))

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.n_edges}, kind={self.kind!r}, connected={self.connected})"

    def __eq__(self, other):
        return isinstance(other, Graph) and self.adjacency == other.adjacency

    def __hash__(self):
        return hash(self.adjacency)

    @property
    def n_edges(self) -> int:
        return int(self.indptr[-1]) // 2

    def edges(self):
        """Edges ``(u, v)`` with ``u < v`` in lexicographic order."""
        return [(u, v) for u, nbrs in enumerate(self.adjacency) for v in nbrs if u < v]

    def mean_degree(self) -> float:
        return 2.0 * self.n_edges / self.n

    def is_bipartite(self) -> bool:
        colour = [-1] * self.n
        for s in range(self.n):
            if colour[s] >= 0:
                continue
            colour[s] = 0
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for v in self.adjacency[u]:
                    if colour[v] < 0:
                        colour[v] = 1 - colour[u]
                        queue.append(v)
                    elif colour[v] == colour[u]:
                        return False
        return True

    @classmethod
    def from_edges(cls, n: int, edges, kind: str = "custom") -> "Graph":
        adj = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise SelfLoop(f"self-loop at node {u}")
            if v in adj[u]:
                raise DuplicateEdge(f"duplicate edge ({u}, {v})")
            adj[u].add(v)
            adj[v].add(u)
        return cls(n, adj, kind=kind)


def _bfs_connected(adjacency) -> bool:
    n = len(adjacency)
    if n == 0:
        return False
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        u = queue.popleft()
        for v in adjacency[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count == n


@dataclass(frozen=True)
class NetworkSpec:
    """Small-world construction parameters.

    ``d`` is the target mean degree. Odd ``d`` is accepted when ``n`` is even:
    each node then also links to its antipode on the ring.
    """

    n: int
    d: int
    p_rewire: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"n must be >= 3, got {self.n}")
        _check_degree(self.n, self.d)
        if not 0.0 <= self.p_rewire <= 1.0:
            raise ValueError(f"p_rewire must lie in [0, 1], got {self.p_rewire}")


def _check_degree(n: int, d: int, allow_odd: bool = True):
    if int(d) != d or d < 2 or d >= n:
        raise InvalidDegree(f"degree must be an integer with 2 <= d < n, got d={d}, n={n}")
    if d % 2:
        if not allow_odd:
            raise InvalidDegree(f"degree must be even, got {d}")
        if n % 2:
            raise InvalidDegree(f"odd degree {d} needs an even node count, got n={n}")


def _lattice_edges(n: int, d: int):
    edges = [(u, (u + j) % n) for j in range(1, d // 2 + 1) for u in range(n)]
    if d % 2:
        edges += [(u, u + n // 2) for u in range(n // 2)]
    return edges


def make_regular_ring(n: int, k: int) -> Graph:
    """Circulant ring where node ``i`` links to ``i +- 1 .. i +- k/2``."""
    _check_degree(n, k, allow_odd=False)
    return Graph.from_edges(n, _lattice_edges(n, k), kind="k-regular-ring")


def make_complete(n: int) -> Graph:
    """Complete graph K_n."""
    if n < 2:
        raise InvalidDegree(f"complete graph needs n >= 2, got {n}")
    return Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)], kind="complete")


def _rewire(n, lattice, p, rng):
    adj = [set() for _ in range(n)]
    for u, v in lattice:
        adj[u].add(v)
        adj[v].add(u)
    if p == 0.0:
        return adj
    for u, v in lattice:
        if rng.random() >= p:
            continue
        if len(adj[u]) >= n - 1:
            continue
        w = int(rng.integers(n))
        while w == u or w in adj[u]:
            w = int(rng.integers(n))
        adj[u].discard(v)
        adj[v].discard(u)
        adj[u].add(w)
        adj[w].add(u)
    return adj


def make_small_world(spec: NetworkSpec) -> Graph:
    """Watts-Strogatz graph, regenerated until connected.

    Each lattice edge ``(u, v)`` is, with probability ``p_rewire``, replaced by
    ``(u, w)`` for a uniformly drawn ``w`` that is neither ``u`` nor already a
    neighbour of ``u``. The edge count ``n*d/2`` is preserved.
    """
    lattice = _lattice_edges(spec.n, spec.d)
    rng = np.random.default_rng(spec.seed)
    for _ in range(MAX_RETRIES):
        adj = _rewire(spec.n, lattice, spec.p_rewire, rng)
        graph = Graph(spec.n, adj, kind="small-world")
        if graph.connected:
            return graph
    raise ConstructionFailed(f"no connected graph after {MAX_RETRIES} attempts for {spec}")


def load_edge_list(path) -> Graph:
    """Read whitespace-separated ``u v`` pairs (0-based); ``#`` starts a comment.

    A disconnected result is returned with ``connected == False`` and a
    `DisconnectedGraphWarning`.
    """
    text = Path(path).read_text()
    edges = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"{path}:{lineno}: expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: non-integer node id in {line!r}") from None
        if u < 0 or v < 0:
            raise ParseError(f"{path}:{lineno}: negative node id")
        if u == v:
            raise SelfLoop(f"{path}:{lineno}: self-loop at node {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise DuplicateEdge(f"{path}:{lineno}: duplicate edge {key}")
        seen.add(key)
        edges.append(key)
    if not edges:
        raise ParseError(f"{path}: no edges")
    n = 1 + max(max(e) for e in edges)
    graph = Graph.from_edges(n, edges)
    if not graph.connected:
        warnings.warn(f"{path}: graph is disconnected", DisconnectedGraphWarning, stacklevel=2)
    return graph


def write_edge_list(graph: Graph, path) -> None:
    lines = [f"{u} {v}" for u, v in graph.edges()]
    Path(path).write_text("\n".join(lines) + "\n")

"""Ring networks, their q-triangulations, and the matrices built from them.

Nodes are dense 0-based integers. A :class:`Graph` is an immutable value:
``edges`` is kept in canonical (sorted, ``u < v``) order and the adjacency
lists are derived from it.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

__all__ = [
    "Graph",
    "FamilySpec",
    "BipartiteResult",
    "build_ring",
    "q_triangulate",
    "family_graph",
    "is_bipartite",
    "is_connected",
    "laplacian",
    "incidence",
    "degree_matrix",
    "write_edge_list",
    "read_edge_list",
]


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on nodes ``0..n-1``."""

    n: int
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"node count must be positive, got {self.n}")
        canon = []
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
            canon.append((u, v) if u < v else (v, u))
        canon.sort()
        for a, b in zip(canon, canon[1:]):
            if a == b:
                raise ValueError(f"duplicate edge {a}")
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in canon:
            adj[u].append(v)
            adj[v].append(u)
        object.__setattr__(self, "edges", tuple(canon))
        object.__setattr__(self, "adjacency", tuple(tuple(sorted(a)) for a in adj))

    @property
    def m(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=int)

    def degree_sum(self) -> int:
        return 2 * self.m


@dataclass(frozen=True)
class FamilySpec:
    """Parameters of a q-triangular r-regular ring: base size n, even degree r, q >= 0."""

    n: int
    r: int
    q: int = 0

    def __post_init__(self) -> None:
        n, r, q = self.n, self.r, self.q
        if n < 3:
            raise ValueError(f"ring needs n >= 3, got n={n}")
        if r < 2 or r % 2:
            raise ValueError(f"degree r must be even and >= 2, got r={r}")
        if r // 2 > (n - 1) // 2:
            raise ValueError(
                f"r={r} too large for n={n}: need r/2 <= floor((n-1)/2) = {(n - 1) // 2}"
            )
        if q < 0:
            raise ValueError(f"triangulation parameter q must be >= 0, got q={q}")

    @property
    def base_edges(self) -> int:
        return self.n * self.r // 2

    @property
    def node_count(self) -> int:
        """Nodes of the triangulated graph, n(1 + q r / 2)."""
        return self.n + self.q * self.base_edges

    @property
    def edge_count(self) -> int:
        return self.base_edges * (1 + 2 * self.q)


@dataclass(frozen=True)
class BipartiteResult:
    is_bipartite: bool
    coloring: tuple[int, ...] | None = None

    def parts(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        if self.coloring is None:
            raise ValueError("graph is not bipartite")
        v1 = tuple(i for i, c in enumerate(self.coloring) if c == 0)
        v2 = tuple(i for i, c in enumerate(self.coloring) if c == 1)
        return v1, v2


def build_ring(n: int, r: int) -> Graph:
    """Circulant ring where node i links to i±1, ..., i±r/2 (mod n)."""
    FamilySpec(n, r, 0)
    edges = set()
    for i in range(n):
        for off in range(1, r // 2 + 1):
            j = (i + off) % n
            edges.add((min(i, j), max(i, j)))
    return Graph(n, tuple(edges))


def q_triangulate(g: Graph, q: int) -> Graph:
    """Add, for every edge (u, v) and each copy 1..q, a new node joined to u and v.

    New nodes are numbered copy-major, edge-minor: node ``n + (i-1)*m + j`` is
    copy ``i`` of edge ``j`` (canonical edge order), so the Laplacian has the
    block form [[qD+L, -B, ..., -B], [-B^T, 2I, 0...], ...].
    """
    if q < 0:
        raise ValueError(f"q must be >= 0, got {q}")
    if q == 0:
        return g
    n, m = g.n, g.m
    new_edges = list(g.edges)
    for i in range(q):
        for j, (u, v) in enumerate(g.edges):
            w = n + i * m + j
            new_edges.append((u, w))
            new_edges.append((v, w))
    return Graph(n + q * m, tuple(new_edges))


def family_graph(spec: FamilySpec) -> Graph:
    g = q_triangulate(build_ring(spec.n, spec.r), spec.q)
    if not is_connected(g):
        raise ValueError(f"{spec} produced a disconnected graph")
    return g


def _bfs_order(g: Graph, start: int = 0):
    seen = [False] * g.n
    seen[start] = True
    queue = deque([start])
    while queue:
        u = queue.popleft()
        yield u
        for v in g.adjacency[u]:
            if not seen[v]:
                seen[v] = True
                queue.append(v)


def is_connected(g: Graph) -> bool:
    return sum(1 for _ in _bfs_order(g)) == g.n


def is_bipartite(g: Graph) -> BipartiteResult:
    """BFS 2-coloring from node 0; node 0 always lands in part V1 (color 0)."""
    color = [-1] * g.n
    for root in range(g.n):
        if color[root] != -1:
            continue
        color[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in g.adjacency[u]:
                if color[v] == -1:
                    color[v] = 1 - color[u]
                    queue.append(v)
                elif color[v] == color[u]:
                    return BipartiteResult(False, None)
    return BipartiteResult(True, tuple(color))


def degree_matrix(g: Graph) -> np.ndarray:
    return np.diag(g.degrees().astype(float))


def laplacian(g: Graph) -> np.ndarray:
    """Dense L = D - A."""
    L = np.zeros((g.n, g.n))
    if g.m:
        e = np.asarray(g.edges)
        L[e[:, 0], e[:, 1]] = -1.0
        L[e[:, 1], e[:, 0]] = -1.0
    L[np.diag_indices(g.n)] = g.degrees()
    return L


def incidence(g: Graph) -> np.ndarray:
    """Unsigned n x m incidence matrix; column j marks the endpoints of edge j."""
    B = np.zeros((g.n, g.m))
    for j, (u, v) in enumerate(g.edges):
        B[u, j] = 1.0
        B[v, j] = 1.0
    return B


def write_edge_list(g: Graph, dest: str | Path | TextIO) -> None:
    """Write ``# nodes=<n> edges=<m>`` followed by one ``u v`` line per edge."""
    lines = [f"# nodes={g.n} edges={g.m}"] + [f"{u} {v}" for u, v in g.edges]
    text = "\n".join(lines) + "\n"
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text)
    else:
        dest.write(text)


def _parse_header(line: str) -> dict[str, int]:
    fields = {}
    for tok in line.lstrip("#").split():
        key, sep, val = tok.partition("=")
        if sep:
            fields[key] = int(val)
    return fields


def read_edge_list(src: str | Path | Iterable[str]) -> Graph:
    if isinstance(src, (str, Path)):
        lines: Iterable[str] = Path(src).read_text().splitlines()
    else:
        lines = src
    header: dict[str, int] = {}
    edges = []
    for raw in lines:
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "nodes=" in line:
                header = _parse_header(line)
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"bad edge line: {raw!r}")
        edges.append((int(parts[0]), int(parts[1])))
    if "nodes" not in header:
        raise ValueError("edge list is missing the '# nodes=<n> edges=<m>' header")
    g = Graph(header["nodes"], tuple(edges))
    if "edges" in header and header["edges"] != g.m:
        raise ValueError(f"header says {header['edges']} edges, file has {g.m}")
    return g

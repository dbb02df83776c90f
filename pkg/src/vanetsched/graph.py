"""Dynamic undirected graph with incrementally maintained degrees.

Node ids are non-negative integers that are never reused within a graph's
lifetime. Degrees live in a flat integer array indexed by id so that whole
local worlds can be gathered with a single fancy-index.
"""
from __future__ import annotations

from collections import deque
from typing import Iterable, Iterator, Mapping, Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

DEFAULT_APL_SOURCES = 256


class GraphError(ValueError):
    """Base class for rejected graph operations."""


class DuplicateNodeError(GraphError):
    pass


class SelfLoopError(GraphError):
    pass


class MissingElementError(GraphError, KeyError):
    pass


class UndefinedInputError(GraphError):
    """Raised when a statistic is undefined for the given graph."""


class DynamicGraph:
    def __init__(self) -> None:
        self._adj: dict[int, set[int]] = {}
        self._deg = np.zeros(64, dtype=np.int64)
        self._used = np.zeros(64, dtype=bool)
        self._n_edges = 0

    def __len__(self) -> int:
        return len(self._adj)

    def __contains__(self, node: int) -> bool:
        return node in self._adj

    def __repr__(self) -> str:
        return f"DynamicGraph(nodes={len(self._adj)}, edges={self._n_edges})"

    def _grow(self, node: int) -> None:
        cap = len(self._deg)
        while cap <= node:
            cap *= 2
        deg = np.zeros(cap, dtype=np.int64)
        deg[: len(self._deg)] = self._deg
        used = np.zeros(cap, dtype=bool)
        used[: len(self._used)] = self._used
        self._deg, self._used = deg, used

    # -- mutation ---------------------------------------------------------

    def add_node(self, node: int) -> None:
        node = int(node)
        if node < 0:
            raise GraphError(f"node id must be non-negative, got {node}")
        if node >= len(self._used):
            self._grow(node)
        if self._used[node]:
            state = "present" if node in self._adj else "retired"
            raise DuplicateNodeError(f"node {node} already {state}")
        self._used[node] = True
        self._adj[node] = set()
        self._deg[node] = 0

    def add_edge(self, i: int, j: int) -> bool:
        """Insert edge ``i-j``. Returns False if it was already present."""
        if i == j:
            raise SelfLoopError(f"self-loop on node {i}")
        try:
            ai, aj = self._adj[i], self._adj[j]
        except KeyError as exc:
            raise MissingElementError(f"node {exc.args[0]} not in graph") from None
        if j in ai:
            return False
        ai.add(j)
        aj.add(i)
        self._deg[i] += 1
        self._deg[j] += 1
        self._n_edges += 1
        return True

    def remove_edge(self, i: int, j: int) -> None:
        if i not in self._adj or j not in self._adj[i]:
            raise MissingElementError(f"edge ({i}, {j}) not in graph")
        self._adj[i].discard(j)
        self._adj[j].discard(i)
        self._deg[i] -= 1
        self._deg[j] -= 1
        self._n_edges -= 1

    def remove_node(self, node: int) -> None:
        """Detach every incident edge, then delete the node and retire its id."""
        try:
            nbrs = self._adj[node]
        except KeyError:
            raise MissingElementError(f"node {node} not in graph") from None
        for other in nbrs:
            self._adj[other].discard(node)
            self._deg[other] -= 1
        self._n_edges -= len(nbrs)
        self._deg[node] = 0
        del self._adj[node]

    # -- queries ----------------------------------------------------------

    def has_node(self, node: int) -> bool:
        return node in self._adj

    def has_edge(self, i: int, j: int) -> bool:
        return i in self._adj and j in self._adj[i]

    def is_retired(self, node: int) -> bool:
        return 0 <= node < len(self._used) and bool(self._used[node]) and node not in self._adj

    def degree(self, node: int) -> int:
        if node not in self._adj:
            raise MissingElementError(f"node {node} not in graph")
        return int(self._deg[node])

    def degrees(self, nodes: Optional[Iterable[int]] = None) -> np.ndarray:
        """Degree array for ``nodes`` (default: all nodes in ascending id order)."""
        if nodes is None:
            idx = self.node_array()
        else:
            idx = np.fromiter(nodes, dtype=np.int64)
            missing = [int(n) for n in idx if int(n) not in self._adj]
            if missing:
                raise MissingElementError(f"nodes not in graph: {missing[:5]}")
        return self._deg[idx].copy()

    def degree_view(self) -> np.ndarray:
        """Read-only view of the raw id-indexed degree array (retired ids read 0)."""
        view = self._deg.view()
        view.flags.writeable = False
        return view

    def neighbors(self, node: int) -> frozenset[int]:
        try:
            return frozenset(self._adj[node])
        except KeyError:
            raise MissingElementError(f"node {node} not in graph") from None

    def nodes(self) -> list[int]:
        return sorted(self._adj)

    def node_array(self) -> np.ndarray:
        return np.fromiter(sorted(self._adj), dtype=np.int64, count=len(self._adj))

    def edges(self) -> Iterator[tuple[int, int]]:
        """Edges as ``(i, j)`` with ``i < j``, in ascending order."""
        for i in sorted(self._adj):
            for j in sorted(self._adj[i]):
                if i < j:
                    yield i, j

    def number_of_nodes(self) -> int:
        return len(self._adj)

    def number_of_edges(self) -> int:
        return self._n_edges

    def total_degree(self) -> int:
        return int(self._deg.sum())

    def copy(self) -> "DynamicGraph":
        g = DynamicGraph.__new__(DynamicGraph)
        g._adj = {k: set(v) for k, v in self._adj.items()}
        g._deg = self._deg.copy()
        g._used = self._used.copy()
        g._n_edges = self._n_edges
        return g

    def audit(self) -> None:
        """Check every structural invariant; raises AssertionError on the first violation."""
        edge_ends = 0
        for i, nbrs in self._adj.items():
            assert i not in nbrs, f"self-loop at {i}"
            assert self._deg[i] == len(nbrs), f"degree[{i}]={self._deg[i]} but |adj|={len(nbrs)}"
            for j in nbrs:
                assert j in self._adj, f"edge ({i}, {j}) points at missing node"
                assert i in self._adj[j], f"asymmetric edge ({i}, {j})"
            edge_ends += len(nbrs)
        assert edge_ends == 2 * self._n_edges, "total degree != 2 * edge count"
        dead = np.ones(len(self._deg), dtype=bool)
        dead[list(self._adj)] = False
        assert not self._deg[dead].any(), "non-zero degree recorded for absent id"

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]], nodes: Iterable[int] = ()) -> "DynamicGraph":
        g = cls()
        for n in nodes:
            g.add_node(n)
        for i, j in edges:
            for n in (i, j):
                if n not in g:
                    g.add_node(n)
            g.add_edge(i, j)
        return g


# -- statistics -------------------------------------------------------------


def connected_components(g: DynamicGraph) -> list[set[int]]:
    """Components by BFS, largest first (ties: smallest member id first)."""
    seen: set[int] = set()
    comps: list[set[int]] = []
    adj = g._adj
    for start in sorted(adj):
        if start in seen:
            continue
        comp = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in comp:
                    comp.add(v)
                    queue.append(v)
        seen |= comp
        comps.append(comp)
    comps.sort(key=lambda c: (-len(c), min(c)))
    return comps


def largest_component(g: DynamicGraph) -> set[int]:
    if len(g) == 0:
        raise UndefinedInputError("largest component of an empty graph")
    return connected_components(g)[0]


def lcc_fraction(g: DynamicGraph) -> float:
    if len(g) == 0:
        raise UndefinedInputError("lcc_fraction of an empty graph")
    return len(largest_component(g)) / len(g)


def _csr(g: DynamicGraph, members: list[int]) -> csr_matrix:
    index = {n: k for k, n in enumerate(members)}
    rows, cols = [], []
    for n in members:
        r = index[n]
        for v in g._adj[n]:
            rows.append(r)
            cols.append(index[v])
    data = np.ones(len(rows), dtype=np.float64)
    return csr_matrix((data, (rows, cols)), shape=(len(members), len(members)))


def average_path_length(
    g: DynamicGraph,
    source_sample: Optional[int] = DEFAULT_APL_SOURCES,
    rng_seed: int = 0,
) -> float:
    """Mean hop distance over ordered pairs inside the largest component.

    When ``source_sample`` is smaller than the component, BFS runs only from
    that many seeded-uniform sources and the mean is taken over their rows.
    Pass ``source_sample=None`` for the exact all-sources value.
    """
    if len(g) == 0:
        raise UndefinedInputError("average_path_length of an empty graph")
    members = sorted(largest_component(g))
    n = len(members)
    if n < 2:
        raise UndefinedInputError("largest component has fewer than 2 nodes")
    if source_sample is not None and source_sample < 1:
        raise ValueError("source_sample must be positive")
    if source_sample is None or source_sample >= n:
        sources = np.arange(n)
    else:
        rng = np.random.default_rng(rng_seed)
        sources = np.sort(rng.choice(n, size=source_sample, replace=False))
    dist = shortest_path(_csr(g, members), method="D", unweighted=True, indices=sources)
    # every target is reachable inside the component; self-distances are 0
    return float(dist.sum() / (len(sources) * (n - 1)))


def degree_variance(g: DynamicGraph, subset: Optional[Iterable[int]] = None) -> float:
    """Population variance (divide by count) of degrees over ``subset`` or all nodes."""
    degs = g.degrees(subset)
    if degs.size == 0:
        raise UndefinedInputError("degree variance over an empty node set")
    return float(np.var(degs.astype(np.float64)))


# -- serialization ----------------------------------------------------------

# Topology text format:
#   '#'-prefixed comment lines anywhere
#   [nodes]   followed by rows "id kind x y range" ('-' marks an unknown field)
#   [edges]   followed by rows "i j"

NodeRow = tuple[Optional[str], Optional[float], Optional[float], Optional[float]]


def _fmt(v: Optional[float]) -> str:
    return "-" if v is None else repr(float(v))


def write_topology(
    path,
    g: DynamicGraph,
    node_table: Optional[Mapping[int, NodeRow]] = None,
    header: Iterable[str] = (),
) -> None:
    node_table = node_table or {}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        fh.write("[nodes]\n")
        for n in g.nodes():
            kind, x, y, rng = node_table.get(n, (None, None, None, None))
            fh.write(f"{n} {kind or '-'} {_fmt(x)} {_fmt(y)} {_fmt(rng)}\n")
        fh.write("[edges]\n")
        for i, j in g.edges():
            fh.write(f"{i} {j}\n")


def read_topology(path) -> tuple[DynamicGraph, dict[int, NodeRow]]:
    g = DynamicGraph()
    table: dict[int, NodeRow] = {}
    section = None

    def num(tok: str) -> Optional[float]:
        return None if tok == "-" else float(tok)

    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line in ("[nodes]", "[edges]"):
                section = line
                continue
            parts = line.split()
            try:
                if section == "[nodes]" and len(parts) == 5:
                    nid = int(parts[0])
                    g.add_node(nid)
                    table[nid] = (None if parts[1] == "-" else parts[1], num(parts[2]), num(parts[3]), num(parts[4]))
                elif section == "[edges]" and len(parts) == 2:
                    g.add_edge(int(parts[0]), int(parts[1]))
                else:
                    raise ValueError("unexpected field count")
            except (ValueError, GraphError) as exc:
                raise ValueError(f"{path}:{lineno}: cannot parse {line!r}: {exc}") from None
    return g, table


__all__ = [
    "DEFAULT_APL_SOURCES",
    "DuplicateNodeError",
    "DynamicGraph",
    "GraphError",
    "MissingElementError",
    "SelfLoopError",
    "UndefinedInputError",
    "average_path_length",
    "connected_components",
    "degree_variance",
    "largest_component",
    "lcc_fraction",
    "read_topology",
    "write_topology",
]


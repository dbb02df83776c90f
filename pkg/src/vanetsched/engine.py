"""Growth and churn simulation loop.

Each :func:`advance_step` runs, in order: mobility events, removal of links
whose endpoints left or drifted out of range, attachment of every newly
arrived OBU, and metric collection. Three scenarios share the loop:

``well_mixed``
    every live node is in range of every other, nothing moves or departs;
    the pure growth process the mean-field theory describes.
``grid``
    random trips over a synthetic street grid with fixed RSUs.
``trace``
    events replayed from a trace file.

Randomness comes from two independent streams derived from ``cfg.seed``: one
for mobility, one for attachment. Mobility is therefore identical across runs
that differ only in ``p``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .attachment import (
    DegenerateWorldError,
    LocalWorld,
    baseline_probs,
    hybrid_probs,
    preprocess_and_normalize,
    sample_targets,
)
from .config import ConfigError, SimConfig
from .graph import DynamicGraph, degree_variance, lcc_fraction
from .mobility import (
    Arrival,
    MobilityTrace,
    Node,
    NodeKind,
    RoadGrid,
    TraceStep,
    generate_grid_trace,
    load_trace,
    local_world_of,
    nodes_feasible,
)

METRICS_HEADER = ("step", "nodes", "edges", "lcc", "var_all", "var_rsu", "mean_deg")

# sub-stream tags for derive_seed
MOBILITY_STREAM = 1
ATTACH_STREAM = 2


class TraceUnderrunError(RuntimeError):
    pass


def derive_seed(base: int, *keys: int) -> int:
    """Deterministic 63-bit sub-seed for job ``keys`` under ``base``."""
    words = [int(base) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)]
    state = np.random.SeedSequence(words).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])


@dataclass(frozen=True)
class MetricsRecord:
    step: int
    node_count: int
    edge_count: int
    lcc_fraction: float
    degree_variance_all: float
    degree_variance_rsu: float
    mean_degree: float

    def row(self) -> list:
        return [
            self.step,
            self.node_count,
            self.edge_count,
            repr(self.lcc_fraction),
            repr(self.degree_variance_all),
            repr(self.degree_variance_rsu),
            repr(self.mean_degree),
        ]


class _GrowthComponents:
    """Union-find over a graph that only ever gains nodes and edges."""

    def __init__(self) -> None:
        self.parent: dict[int, int] = {}
        self.size: dict[int, int] = {}
        self.largest = 0

    def add(self, node: int) -> None:
        self.parent[node] = node
        self.size[node] = 1
        self.largest = max(self.largest, 1)

    def find(self, node: int) -> int:
        root = node
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[node] != root:
            self.parent[node], node = root, self.parent[node]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size.pop(rb)
        self.largest = max(self.largest, self.size[ra])


@dataclass
class SimState:
    graph: DynamicGraph
    nodes: dict[int, Node]
    t: int
    rng: np.random.Generator
    trace: Optional[MobilityTrace] = None
    next_id: int = 0
    components: Optional[_GrowthComponents] = None
    rsu_ids: set[int] = field(default_factory=set)

    def audit(self, cfg: SimConfig) -> None:
        self.graph.audit()
        assert set(self.graph.nodes()) == set(self.nodes), "graph and registry disagree"
        if cfg.mode != "well_mixed":
            for i, j in self.graph.edges():
                assert nodes_feasible(self.nodes[i], self.nodes[j]), f"infeasible link ({i}, {j})"

    def node_table(self) -> dict[int, tuple]:
        table = {}
        for nid, node in self.nodes.items():
            x, y = node.position if node.position is not None else (None, None)
            table[nid] = (node.kind.value, x, y, node.range_m)
        return table


def _range_for(cfg: SimConfig, kind: NodeKind) -> float:
    return cfg.rsu_range_m if kind is NodeKind.RSU else cfg.obu_range_m


def _grid_trace(cfg: SimConfig) -> MobilityTrace:
    grid = RoadGrid(cfg.grid_rows, cfg.grid_cols, cfg.block_m)
    sites = grid.rsu_sites()
    if cfg.s > len(sites):
        raise ConfigError("s", f"{cfg.s} RSUs requested but the grid offers only {len(sites)} sites")
    return generate_grid_trace(
        cfg.grid_rows,
        cfg.grid_cols,
        cfg.block_m,
        cfg.n_per_step,
        max(cfg.steps, 1),
        cfg.speed_mps,
        derive_seed(cfg.seed, MOBILITY_STREAM),
        rsu_positions=sites[: cfg.s],
        initial_obus=cfg.m0 - cfg.s,
    )


def init_network(cfg: SimConfig, trace: Optional[MobilityTrace] = None) -> SimState:
    """Place the initial core of ``m0`` nodes (``s`` RSUs first) and connect it completely."""
    cfg.validate()
    rng = np.random.default_rng(derive_seed(cfg.seed, ATTACH_STREAM))
    state = SimState(graph=DynamicGraph(), nodes={}, t=0, rng=rng)

    if cfg.mode == "well_mixed":
        core = [
            (nid, NodeKind.RSU if nid < cfg.s else NodeKind.OBU, None)
            for nid in range(cfg.m0)
        ]
        state.components = _GrowthComponents()
    else:
        if trace is None:
            trace = _grid_trace(cfg) if cfg.mode == "grid" else load_trace(cfg.trace_path)
        n_rsu = sum(a.kind is NodeKind.RSU for a in trace.initial.arrivals)
        if len(trace.initial.arrivals) != cfg.m0 or n_rsu != cfg.s:
            raise ConfigError(
                "m0",
                f"trace step 0 holds {len(trace.initial.arrivals)} nodes ({n_rsu} RSUs), "
                f"config expects m0={cfg.m0}, s={cfg.s}",
            )
        core = [(a.id, a.kind, (a.x, a.y)) for a in trace.initial.arrivals]
        state.trace = trace

    for nid, kind, pos in core:
        _register(state, cfg, nid, kind, pos)
    ids = [c[0] for c in core]
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            _link(state, ids[a], ids[b])
    return state


def _register(state: SimState, cfg: SimConfig, nid: int, kind: NodeKind, pos) -> None:
    state.graph.add_node(nid)
    state.nodes[nid] = Node(nid, kind, pos, _range_for(cfg, kind), join_step=state.t)
    if kind is NodeKind.RSU:
        state.rsu_ids.add(nid)
    if state.components is not None:
        state.components.add(nid)
    state.next_id = max(state.next_id, nid + 1)


def _link(state: SimState, i: int, j: int) -> None:
    if state.graph.add_edge(i, j) and state.components is not None:
        state.components.union(i, j)


def _well_mixed_world(state: SimState, nid: int) -> LocalWorld:
    # no departures and ids follow arrival order, so the nodes that have
    # already joined are exactly 0..nid-1
    ids = np.arange(nid, dtype=np.int64)
    return LocalWorld(ids, state.graph.degree_view()[ids])


def select_targets(lw: LocalWorld, cfg: SimConfig, state: SimState) -> list[int]:
    """Pick the joining node's targets from its local world."""
    if lw.size == 0:
        return []
    if cfg.model == "baseline":
        if lw.size > cfg.local_world_m:
            keep = np.sort(state.rng.choice(lw.size, size=cfg.local_world_m, replace=False))
            lw = LocalWorld(lw.ids[keep], lw.degrees[keep])
    if lw.size <= cfg.m:
        return lw.ids.tolist()
    try:
        if cfg.model == "baseline":
            n_now = state.graph.number_of_nodes()
            t_eff = max(n_now - cfg.m0, lw.size - cfg.m0, 0)
            raw = baseline_probs(lw, lw.size, cfg.m0, t_eff)
        else:
            raw = hybrid_probs(lw, cfg.p)
    except DegenerateWorldError:
        raw = np.full(lw.size, 1.0 / lw.size)
    probs = preprocess_and_normalize(raw, cfg.eps)
    return sample_targets(lw, probs, cfg.m, cfg.eps, state.rng)


def _events(state: SimState, cfg: SimConfig) -> TraceStep:
    if cfg.mode == "well_mixed":
        st = TraceStep()
        for k in range(cfg.n_per_step):
            st.arrivals.append(Arrival(state.next_id + k, NodeKind.OBU, math.nan, math.nan))
        return st
    if state.t >= len(state.trace.steps):
        raise TraceUnderrunError(f"trace has {len(state.trace.steps)} steps, step {state.t + 1} requested")
    return state.trace.steps[state.t]


def advance_step(state: SimState, cfg: SimConfig) -> MetricsRecord:
    events = _events(state, cfg)
    g = state.graph
    step = state.t + 1

    # (a) mobility
    for mv in events.moves:
        state.nodes[mv.id].position = (mv.x, mv.y)
    for nid in events.departures:
        g.remove_node(nid)
        del state.nodes[nid]
    state.t = step
    arrived = []
    for a in events.arrivals:
        pos = None if cfg.mode == "well_mixed" else (a.x, a.y)
        _register(state, cfg, a.id, a.kind, pos)
        if a.kind is NodeKind.OBU:
            arrived.append(a.id)

    # (b) drop links that are no longer feasible
    if cfg.mode != "well_mixed":
        nodes = state.nodes
        stale = [(i, j) for i, j in g.edges() if not nodes_feasible(nodes[i], nodes[j])]
        for i, j in stale:
            g.remove_edge(i, j)

    # (c) attach arrivals in order; each sees links made by earlier ones,
    # while arrivals still waiting their turn stay out of its local world
    pending = set(arrived)
    for nid in arrived:
        pending.discard(nid)
        if cfg.mode == "well_mixed":
            lw = _well_mixed_world(state, nid)
        else:
            lw = local_world_of(nid, state.nodes, g)
            if pending:
                keep = ~np.isin(lw.ids, list(pending))
                lw = LocalWorld(lw.ids[keep], lw.degrees[keep])
        for target in select_targets(lw, cfg, state):
            _link(state, nid, target)

    return collect_metrics(state)


def collect_metrics(state: SimState) -> MetricsRecord:
    g = state.graph
    n = g.number_of_nodes()
    e = g.number_of_edges()
    if n == 0:
        return MetricsRecord(state.t, 0, 0, math.nan, math.nan, math.nan, math.nan)
    if state.components is not None:
        lcc = state.components.largest / n
    else:
        lcc = lcc_fraction(g)
    rsu = sorted(state.rsu_ids & state.nodes.keys())
    var_rsu = degree_variance(g, rsu) if rsu else math.nan
    return MetricsRecord(
        step=state.t,
        node_count=n,
        edge_count=e,
        lcc_fraction=lcc,
        degree_variance_all=degree_variance(g),
        degree_variance_rsu=var_rsu,
        mean_degree=2.0 * e / n,
    )


def run(
    cfg: SimConfig,
    on_step: Optional[Callable[[SimState, MetricsRecord], None]] = None,
    trace: Optional[MobilityTrace] = None,
) -> tuple[list[MetricsRecord], SimState]:
    """Run ``cfg.steps`` steps from a fresh core; ``on_step`` sees the state after each."""
    state = init_network(cfg, trace)
    records = []
    for _ in range(cfg.steps):
        rec = advance_step(state, cfg)
        records.append(rec)
        if on_step is not None:
            on_step(state, rec)
    return records, state


def metrics_csv(records: Iterable[MetricsRecord], header: Iterable[str] = ()) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_HEADER)
    for rec in records:
        w.writerow(rec.row())
    return buf.getvalue()


def write_metrics_csv(path, records: Iterable[MetricsRecord], header: Iterable[str] = ()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(metrics_csv(records, header))


__all__ = [
    "METRICS_HEADER",
    "MetricsRecord",
    "SimState",
    "TraceUnderrunError",
    "advance_step",
    "collect_metrics",
    "derive_seed",
    "init_network",
    "metrics_csv",
    "run",
    "select_targets",
    "write_metrics_csv",
]

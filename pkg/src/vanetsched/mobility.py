"""Node placement, radio-range feasibility and mobility traces.

Traces are stored as CSV with header ``step,event,node_id,kind,x,y``. Step 0
holds the initial population (arrivals only); steps 1..N are the simulated
seconds. A ``# steps=N`` comment line records trailing empty steps.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .attachment import LocalWorld
from .graph import DynamicGraph

OBU_RANGE_M = 300.0
RSU_RANGE_M = 500.0
TRACE_HEADER = ("step", "event", "node_id", "kind", "x", "y")


class NodeKind(str, Enum):
    RSU = "RSU"
    OBU = "OBU"


Position = tuple[float, float]


@dataclass
class Node:
    id: int
    kind: NodeKind
    position: Optional[Position]
    range_m: float
    join_step: int = 0


class TraceError(ValueError):
    pass


class TraceParseError(TraceError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class TraceValidationError(TraceError):
    pass


class GeometryError(ValueError):
    pass


# -- feasibility --------------------------------------------------------------


def link_threshold(kind_a: NodeKind, range_a: float, kind_b: NodeKind, range_b: float) -> float:
    """Maximum link distance: RSU range if an RSU is involved, else the shorter OBU range."""
    a_rsu = kind_a is NodeKind.RSU
    b_rsu = kind_b is NodeKind.RSU
    if a_rsu and b_rsu:
        return max(range_a, range_b)
    if a_rsu:
        return range_a
    if b_rsu:
        return range_b
    return min(range_a, range_b)


def link_feasible(a: tuple[NodeKind, Position, float], b: tuple[NodeKind, Position, float]) -> bool:
    kind_a, pos_a, range_a = a
    kind_b, pos_b, range_b = b
    dist = math.hypot(pos_a[0] - pos_b[0], pos_a[1] - pos_b[1])
    return dist <= link_threshold(NodeKind(kind_a), range_a, NodeKind(kind_b), range_b)


def nodes_feasible(a: Node, b: Node) -> bool:
    return link_feasible((a.kind, a.position, a.range_m), (b.kind, b.position, b.range_m))


def local_world_of(node_id: int, nodes: Mapping[int, Node], graph: DynamicGraph) -> LocalWorld:
    """Every other live node within link range of ``node_id``, with current degrees.

    Members come out in ascending id order. A node without a position (the
    well-mixed scenario) sees every other live node.
    """
    me = nodes[node_id]
    others = sorted(k for k in nodes if k != node_id)
    if not others:
        return LocalWorld(np.empty(0, np.int64), np.empty(0, np.int64))
    ids = np.array(others, dtype=np.int64)
    if me.position is not None:
        xy = np.array([nodes[k].position for k in others], dtype=np.float64)
        rng = np.array([nodes[k].range_m for k in others], dtype=np.float64)
        rsu = np.array([nodes[k].kind is NodeKind.RSU for k in others], dtype=bool)
        if me.kind is NodeKind.RSU:
            thr = np.where(rsu, np.maximum(rng, me.range_m), me.range_m)
        else:
            thr = np.where(rsu, rng, np.minimum(rng, me.range_m))
        dist = np.hypot(xy[:, 0] - me.position[0], xy[:, 1] - me.position[1])
        ids = ids[dist <= thr]
    return LocalWorld(ids, graph.degree_view()[ids])


# -- traces --------------------------------------------------------------------


@dataclass(frozen=True)
class Arrival:
    id: int
    kind: NodeKind
    x: float
    y: float


@dataclass(frozen=True)
class Move:
    id: int
    x: float
    y: float


@dataclass
class TraceStep:
    arrivals: list[Arrival] = field(default_factory=list)
    moves: list[Move] = field(default_factory=list)
    departures: list[int] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (self.arrivals or self.moves or self.departures)


@dataclass
class MobilityTrace:
    initial: TraceStep = field(default_factory=TraceStep)
    steps: list[TraceStep] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def all_steps(self) -> Iterable[tuple[int, TraceStep]]:
        yield 0, self.initial
        for k, st in enumerate(self.steps, 1):
            yield k, st

    def validate(self) -> None:
        """Raise TraceValidationError naming the offending node on the first violation."""
        kinds: dict[int, NodeKind] = {}
        departed: set[int] = set()
        if self.initial.moves or self.initial.departures:
            raise TraceValidationError("step 0 may only contain arrivals")
        for k, st in self.all_steps():
            for a in st.arrivals:
                if a.id in departed:
                    raise TraceValidationError(f"step {k}: node {a.id} re-arrives after departure")
                if a.id in kinds:
                    raise TraceValidationError(f"step {k}: node {a.id} arrives twice")
                if not (math.isfinite(a.x) and math.isfinite(a.y)):
                    raise TraceValidationError(f"step {k}: node {a.id} has a non-finite position")
                kinds[a.id] = a.kind
            for mv in st.moves:
                _check_live(k, mv.id, "moves", kinds, departed)
                if not (math.isfinite(mv.x) and math.isfinite(mv.y)):
                    raise TraceValidationError(f"step {k}: node {mv.id} has a non-finite position")
            for nid in st.departures:
                _check_live(k, nid, "departs", kinds, departed)
                departed.add(nid)


def _check_live(step: int, nid: int, verb: str, kinds: dict, departed: set) -> None:
    if nid in departed:
        raise TraceValidationError(f"step {step}: node {nid} {verb} after departure")
    if nid not in kinds:
        raise TraceValidationError(f"step {step}: node {nid} {verb} before arriving")
    if kinds[nid] is NodeKind.RSU:
        raise TraceValidationError(f"step {step}: RSU {nid} {verb}")


def _coord(v: float) -> str:
    return f"{v:.3f}"


def dump_trace(trace: MobilityTrace, header: Iterable[str] = ()) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    buf.write(f"# steps={len(trace.steps)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    kinds: dict[int, NodeKind] = {}
    for k, st in trace.all_steps():
        for a in st.arrivals:
            kinds[a.id] = a.kind
            w.writerow([k, "arrive", a.id, a.kind.value, _coord(a.x), _coord(a.y)])
        for mv in st.moves:
            w.writerow([k, "move", mv.id, kinds[mv.id].value, _coord(mv.x), _coord(mv.y)])
        for nid in st.departures:
            w.writerow([k, "depart", nid, kinds[nid].value, "", ""])
    return buf.getvalue()


def save_trace(trace: MobilityTrace, path, header: Iterable[str] = ()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dump_trace(trace, header))


def parse_trace(text: str) -> MobilityTrace:
    declared: Optional[int] = None
    rows: list[tuple[int, list[str]]] = []
    header_seen = False
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped[1:].strip()
            if body.startswith("steps="):
                try:
                    declared = int(body[len("steps="):])
                except ValueError:
                    raise TraceParseError(lineno, f"bad steps declaration {body!r}") from None
            continue
        fields = next(csv.reader([line]))
        if not header_seen:
            if tuple(f.strip() for f in fields) != TRACE_HEADER:
                raise TraceParseError(lineno, f"expected header {','.join(TRACE_HEADER)}")
            header_seen = True
            continue
        rows.append((lineno, fields))
    if not header_seen:
        raise TraceParseError(1, "missing header")

    trace = MobilityTrace()
    kinds: dict[int, NodeKind] = {}
    last_step = 0
    for lineno, fields in rows:
        if len(fields) != 6:
            raise TraceParseError(lineno, f"expected 6 fields, got {len(fields)}")
        step_s, event, nid_s, kind_s, x_s, y_s = (f.strip() for f in fields)
        try:
            step, nid = int(step_s), int(nid_s)
        except ValueError:
            raise TraceParseError(lineno, "step and node_id must be integers") from None
        if step < 0 or nid < 0:
            raise TraceParseError(lineno, "step and node_id must be non-negative")
        if step < last_step:
            raise TraceParseError(lineno, f"step {step} after step {last_step}")
        last_step = step
        while len(trace.steps) < step:
            trace.steps.append(TraceStep())
        st = trace.initial if step == 0 else trace.steps[step - 1]
        kind = None
        if kind_s:
            try:
                kind = NodeKind(kind_s)
            except ValueError:
                raise TraceParseError(lineno, f"unknown kind {kind_s!r}") from None
        if event == "depart":
            if x_s or y_s:
                raise TraceParseError(lineno, "depart rows carry no position")
            st.departures.append(nid)
            continue
        try:
            x, y = float(x_s), float(y_s)
        except ValueError:
            raise TraceParseError(lineno, "x and y must be decimal numbers") from None
        if event == "arrive":
            if kind is None:
                raise TraceParseError(lineno, "arrive rows need a kind")
            kinds.setdefault(nid, kind)
            st.arrivals.append(Arrival(nid, kind, x, y))
        elif event == "move":
            if kind is not None and nid in kinds and kinds[nid] is not kind:
                raise TraceParseError(lineno, f"node {nid} changes kind")
            st.moves.append(Move(nid, x, y))
        else:
            raise TraceParseError(lineno, f"unknown event {event!r}")
    if declared is not None:
        if declared < len(trace.steps):
            raise TraceParseError(1, f"steps={declared} but events reach step {len(trace.steps)}")
        while len(trace.steps) < declared:
            trace.steps.append(TraceStep())
    trace.validate()
    return trace


def load_trace(path) -> MobilityTrace:
    with open(path, encoding="utf-8") as fh:
        return parse_trace(fh.read())


# -- synthetic road grid ---------------------------------------------------------


@dataclass(frozen=True)
class RoadGrid:
    """Manhattan street grid; intersection (r, c) sits at (c * block_m, r * block_m)."""

    rows: int
    cols: int
    block_m: float

    def __post_init__(self) -> None:
        if self.rows < 2 or self.cols < 2:
            raise GeometryError(f"grid needs at least 2x2 intersections, got {self.rows}x{self.cols}")
        if not (self.block_m > 0 and math.isfinite(self.block_m)):
            raise GeometryError(f"block length must be positive, got {self.block_m}")

    @property
    def width(self) -> float:
        return (self.cols - 1) * self.block_m

    @property
    def height(self) -> float:
        return (self.rows - 1) * self.block_m

    def point(self, rc: tuple[int, int]) -> Position:
        return (rc[1] * self.block_m, rc[0] * self.block_m)

    def boundary(self) -> list[tuple[int, int]]:
        return [
            (r, c)
            for r in range(self.rows)
            for c in range(self.cols)
            if r in (0, self.rows - 1) or c in (0, self.cols - 1)
        ]

    def rsu_sites(self) -> list[Position]:
        """Default RSU sites: intersections on the central row and column, nearest the centre first."""
        mid_r, mid_c = self.rows // 2, self.cols // 2
        sites = {(mid_r, c) for c in range(self.cols)} | {(r, mid_c) for r in range(self.rows)}
        ordered = sorted(sites, key=lambda rc: (abs(rc[0] - mid_r) + abs(rc[1] - mid_c), rc))
        return [self.point(rc) for rc in ordered]


def _route(grid: RoadGrid, start: tuple[int, int], goal: tuple[int, int], rng: np.random.Generator) -> list[Position]:
    """Random monotone staircase path between two intersections."""
    pts = [grid.point(start)]
    r, c = start
    while (r, c) != goal:
        dr = int(np.sign(goal[0] - r))
        dc = int(np.sign(goal[1] - c))
        if dr and dc:
            if rng.random() < 0.5:
                r += dr
            else:
                c += dc
        elif dr:
            r += dr
        else:
            c += dc
        pts.append(grid.point((r, c)))
    return pts


class _Vehicle:
    __slots__ = ("id", "pts", "cum", "s")

    def __init__(self, nid: int, pts: list[Position]):
        self.id = nid
        self.pts = pts
        seg = [math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(pts, pts[1:])]
        self.cum = np.concatenate([[0.0], np.cumsum(seg)])
        self.s = 0.0

    @property
    def length(self) -> float:
        return float(self.cum[-1])

    def position(self) -> Position:
        k = int(np.searchsorted(self.cum, self.s, side="right")) - 1
        k = min(k, len(self.pts) - 2)
        frac = (self.s - self.cum[k]) / (self.cum[k + 1] - self.cum[k])
        (x0, y0), (x1, y1) = self.pts[k], self.pts[k + 1]
        return (round(x0 + frac * (x1 - x0), 3), round(y0 + frac * (y1 - y0), 3))


def generate_grid_trace(
    rows: int,
    cols: int,
    block_m: float,
    n_per_step: int,
    steps: int,
    speed_mps: float,
    seed: int,
    *,
    rsu_positions: Sequence[Position] = (),
    initial_obus: int = 0,
) -> MobilityTrace:
    """Random trips over a street grid, one simulated second per step.

    ``n_per_step`` vehicles enter each step at random boundary intersections
    and drive a random staircase route to a different boundary intersection,
    covering ``speed_mps`` metres of street per step. A vehicle departs on the
    step its remaining route is used up. RSUs (ids first) and
    ``initial_obus`` vehicles, started at random intersections, form step 0.
    """
    grid = RoadGrid(rows, cols, float(block_m))
    if steps < 1:
        raise GeometryError(f"steps must be at least 1, got {steps}")
    if n_per_step < 0 or initial_obus < 0:
        raise GeometryError("vehicle counts must be non-negative")
    if not (speed_mps > 0 and math.isfinite(speed_mps)):
        raise GeometryError(f"speed must be positive, got {speed_mps}")
    for x, y in rsu_positions:
        if not (0 <= x <= grid.width and 0 <= y <= grid.height):
            raise GeometryError(f"RSU at ({x}, {y}) lies outside the {grid.width} x {grid.height} m arena")

    rng = np.random.default_rng(seed)
    exits = grid.boundary()
    all_rc = [(r, c) for r in range(rows) for c in range(cols)]
    trace = MobilityTrace()
    next_id = 0
    active: list[_Vehicle] = []

    def spawn(start: tuple[int, int], step: TraceStep) -> None:
        nonlocal next_id
        choices = [rc for rc in exits if rc != start]
        goal = choices[int(rng.integers(len(choices)))]
        veh = _Vehicle(next_id, _route(grid, start, goal, rng))
        next_id += 1
        active.append(veh)
        x, y = veh.position()
        step.arrivals.append(Arrival(veh.id, NodeKind.OBU, x, y))

    for x, y in rsu_positions:
        trace.initial.arrivals.append(Arrival(next_id, NodeKind.RSU, round(float(x), 3), round(float(y), 3)))
        next_id += 1
    for _ in range(initial_obus):
        spawn(all_rc[int(rng.integers(len(all_rc)))], trace.initial)

    for _ in range(steps):
        st = TraceStep()
        still = []
        for veh in active:
            veh.s += speed_mps
            if veh.s >= veh.length:
                st.departures.append(veh.id)
            else:
                x, y = veh.position()
                st.moves.append(Move(veh.id, x, y))
                still.append(veh)
        active = still
        for _ in range(n_per_step):
            spawn(exits[int(rng.integers(len(exits)))], st)
        trace.steps.append(st)
    return trace


__all__ = [
    "Arrival",
    "GeometryError",
    "MobilityTrace",
    "Move",
    "Node",
    "NodeKind",
    "OBU_RANGE_M",
    "RSU_RANGE_M",
    "RoadGrid",
    "TraceError",
    "TraceParseError",
    "TraceStep",
    "TraceValidationError",
    "generate_grid_trace",
    "link_feasible",
    "link_threshold",
    "load_trace",
    "local_world_of",
    "nodes_feasible",
    "parse_trace",
    "save_trace",
]

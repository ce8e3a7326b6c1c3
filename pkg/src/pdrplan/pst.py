"""Partitioned sequence triple: representation, packing, schedule, costs.

A solution candidate is a triple (ps, qs, rs) plus a partition of the
modules into reconfigurable regions and time layers:

* ps/qs form a nested sequence pair.  Module blocks of one layer are
  contiguous in both sequences, and layer blocks of one region are
  contiguous too, so any two regions relate uniformly (all left-of, all
  below, ...).
* rs is the global configuration order of the time layers (one
  configuration port, fully serialized).
* Two modules constrain each other spatially iff they are in different
  regions or share a time layer; layers of one region time-share its
  rectangle and impose no mutual constraint.

Packing evaluates the filtered sequence-pair relations by longest paths,
exactly as in plain sequence-pair floorplanning.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

from .chip import ChipModel, Rect, ResourceVector
from .taskgraph import TaskGraph

# A time layer is identified by (region id, layer id within the region).
LayerKey = tuple


@dataclass(frozen=True)
class PST:
    """Partitioned sequence triple; plain immutable data."""

    ps: tuple
    qs: tuple
    rs: tuple
    partition: dict  # module id -> (region, layer)

    def __post_init__(self):
        object.__setattr__(self, "ps", tuple(self.ps))
        object.__setattr__(self, "qs", tuple(self.qs))
        object.__setattr__(self, "rs", tuple(self.rs))
        object.__setattr__(self, "partition", dict(self.partition))

    @cached_property
    def layer_members(self) -> dict:
        """Layer key -> module ids in ps order."""
        members: dict = {}
        for m in self.ps:
            members.setdefault(self.partition[m], []).append(m)
        return members

    @cached_property
    def region_layers(self) -> dict:
        """Region id -> its layer keys in rs order."""
        out: dict = {}
        for key in self.rs:
            out.setdefault(key[0], []).append(key)
        return out

    def region_of(self, m: str) -> int:
        return self.partition[m][0]

    def layer_of(self, m: str) -> LayerKey:
        return self.partition[m]

    def without(self, m: str) -> "PST":
        """Copy with module m deleted; an emptied layer leaves rs."""
        part = dict(self.partition)
        key = part.pop(m)
        rs = self.rs
        if not any(v == key for v in part.values()):
            rs = tuple(k for k in rs if k != key)
        return PST(
            ps=tuple(x for x in self.ps if x != m),
            qs=tuple(x for x in self.qs if x != m),
            rs=rs,
            partition=part,
        )


def validate(pst: PST, g: TaskGraph) -> list:
    """All representation violations (empty list means the PST is valid)."""
    violations = []
    ps_set, qs_set, part_set = set(pst.ps), set(pst.qs), set(pst.partition)
    if len(ps_set) != len(pst.ps) or len(qs_set) != len(pst.qs):
        violations.append("permutation mismatch: duplicate module in ps or qs")
    if ps_set != qs_set or ps_set != part_set:
        violations.append("permutation mismatch: ps, qs, partition cover "
                          "different module sets")
        return violations
    known = set(g.module_ids)
    unknown = sorted(ps_set - known)
    if unknown:
        violations.append(f"unknown modules: {', '.join(unknown)}")
        return violations

    nonempty = set(pst.partition.values())
    rs_set = set(pst.rs)
    if len(rs_set) != len(pst.rs):
        violations.append("rs lists a layer twice")
    if rs_set - nonempty:
        extra = sorted(rs_set - nonempty)
        violations.append(f"rs references empty layers: {extra}")
    if nonempty - rs_set:
        missing = sorted(nonempty - rs_set)
        violations.append(f"layers missing from rs: {missing}")

    for name, seq in (("ps", pst.ps), ("qs", pst.qs)):
        spans: dict = {}
        for i, m in enumerate(seq):
            region, key = pst.partition[m][0], pst.partition[m]
            for group in (("region", region), ("layer", key)):
                if group not in spans:
                    spans[group] = [i, i, 1]
                else:
                    rec = spans[group]
                    rec[1] = i
                    rec[2] += 1
        for (kind, ident), (first, last, count) in spans.items():
            if last - first + 1 != count:
                violations.append(f"{kind} {ident} not contiguous in {name}")

    if rs_set == nonempty and len(rs_set) == len(pst.rs):
        rs_index = {key: i for i, key in enumerate(pst.rs)}
        for e in g.edges:
            if e.src in pst.partition and e.dst in pst.partition:
                if rs_index[pst.partition[e.src]] > rs_index[pst.partition[e.dst]]:
                    violations.append(
                        f"dependency order: {e.src} -> {e.dst} but layer "
                        f"{pst.partition[e.src]} is configured after "
                        f"{pst.partition[e.dst]}")
    return violations


# ----------------------------------------------------------------------
# packing

@dataclass(frozen=True)
class Placement:
    """Module and region rectangles plus the occupied extents."""

    coords: dict  # module id -> Rect
    region_boxes: dict  # region id -> Rect
    x_max: int
    y_max: int


def pack(pst: PST, shapes: dict, chip: ChipModel) -> Placement:
    """Longest-path evaluation of the filtered sequence pair.

    Always succeeds; a result exceeding the chip is reported by
    is_feasible, not here.  y coordinates stay quantum-aligned because
    every height is a quantum multiple.
    """
    ps, qs = pst.ps, pst.qs
    n = len(ps)
    part = pst.partition
    qpos = {m: i for i, m in enumerate(qs)}
    q = [qpos[m] for m in ps]
    reg = [part[m][0] for m in ps]
    lay = [part[m] for m in ps]
    w = [shapes[m].w for m in ps]
    h = [shapes[m].h for m in ps]

    x0 = [0] * n
    for j in range(n):
        qj, rj, lj = q[j], reg[j], lay[j]
        best = 0
        for i in range(j):
            if q[i] < qj and (reg[i] != rj or lay[i] == lj):
                v = x0[i] + w[i]
                if v > best:
                    best = v
        x0[j] = best

    ppos = {m: i for i, m in enumerate(ps)}
    p_of_q = [ppos[m] for m in qs]
    y0 = [0] * n
    for jq in range(n):
        jp = p_of_q[jq]
        rj, lj = reg[jp], lay[jp]
        best = 0
        for iq in range(jq):
            ip = p_of_q[iq]
            if ip > jp and (reg[ip] != rj or lay[ip] == lj):
                v = y0[ip] + h[ip]
                if v > best:
                    best = v
        y0[jp] = best

    coords = {}
    boxes: dict = {}
    x_max = y_max = 0
    for idx, m in enumerate(ps):
        r = Rect(x0[idx] + 1, y0[idx] + 1, w[idx], h[idx])
        coords[m] = r
        x_max = max(x_max, r.x_hi)
        y_max = max(y_max, r.y_hi)
        region = reg[idx]
        if region in boxes:
            bx1, by1, bx2, by2 = boxes[region]
            boxes[region] = (min(bx1, r.x), min(by1, r.y),
                             max(bx2, r.x_hi), max(by2, r.y_hi))
        else:
            boxes[region] = (r.x, r.y, r.x_hi, r.y_hi)
    region_boxes = {
        region: Rect(bx1, by1, bx2 - bx1 + 1, by2 - by1 + 1)
        for region, (bx1, by1, bx2, by2) in boxes.items()
    }
    return Placement(coords=coords, region_boxes=region_boxes,
                     x_max=x_max, y_max=y_max)


def is_feasible(p: Placement, chip: ChipModel) -> bool:
    """True iff the packed extents stay inside the chip boundary."""
    return p.x_max <= chip.width and p.y_max <= chip.height


# ----------------------------------------------------------------------
# schedule

@dataclass(frozen=True)
class ScheduleResult:
    config_start: dict  # layer key -> ms
    config_end: dict
    exec_start: dict  # module id -> ms
    exec_end: dict
    makespan: float


def schedule(pst: PST, g: TaskGraph) -> ScheduleResult:
    """Timeline of the serialized configuration port and module execution.

    Layers are configured in rs order; a layer's configuration waits for
    the port to free up and for the previous layer of the same region to
    finish executing.  A module starts once its layer is configured and
    all its predecessors have finished.
    """
    rs_set = set(pst.rs)
    for key in pst.partition.values():
        if key not in rs_set:
            raise ValueError(f"schedule: layer {key} missing from rs")
    members = pst.layer_members
    preds = g.predecessors
    config_start: dict = {}
    config_end: dict = {}
    exec_start: dict = {}
    exec_end: dict = {}
    layer_exec_end: dict = {}
    region_prev: dict = {}
    port_free = 0.0
    present = set(pst.partition)
    for key in pst.rs:
        mods = members[key]
        conf_sum = 0.0
        for m in mods:
            conf = g.module(m).conf_time
            if conf is None:
                raise ValueError(f"schedule: module {m} has unresolved conf time")
            conf_sum += conf
        region = key[0]
        start = port_free
        prev = region_prev.get(region)
        if prev is not None:
            start = max(start, layer_exec_end[prev])
        config_start[key] = start
        config_end[key] = start + conf_sum
        port_free = config_end[key]
        region_prev[region] = key

        # Intra-layer dependencies force a topological sweep within the layer.
        mods_set = set(mods)
        remaining = {m: sum(1 for p in preds[m] if p in mods_set) for m in mods}
        ready = [m for m in mods if remaining[m] == 0]
        done = 0
        while ready:
            m = ready.pop(0)
            done += 1
            start_t = config_end[key]
            for p in preds[m]:
                if p in present:
                    start_t = max(start_t, exec_end[p])
            exec_start[m] = start_t
            exec_end[m] = start_t + g.module(m).exec_time
            for succ in g.successors[m]:
                if succ in remaining and remaining[succ] > 0:
                    remaining[succ] -= 1
                    if remaining[succ] == 0:
                        ready.append(succ)
        if done != len(mods):
            raise ValueError(f"schedule: unresolved intra-layer dependency in {key}")
        layer_exec_end[key] = max(exec_end[m] for m in mods)
    makespan = max(exec_end.values(), default=0.0)
    return ScheduleResult(config_start, config_end, exec_start, exec_end, makespan)


# ----------------------------------------------------------------------
# costs

@dataclass(frozen=True)
class CostWeights:
    """Weights and normalizers of the combined cost.

    Normalizers left as None are derived from the instance by resolve():
    area by the chip area, schedule by critical path + total configuration
    time, communication by total edge weight times the chip half-perimeter.
    """

    alpha: float = 1.0
    beta: float = 1.0
    gamma_comm: float = 1.0
    lambda_: float = 1.0
    area_norm: float | None = None
    schedule_norm: float | None = None
    comm_norm: float | None = None
    hetero_norm: float = 3.0
    boundary_penalty: float = 10.0
    hetero_sentinel: float = 1000.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma_comm", "lambda_"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("area_norm", "schedule_norm", "comm_norm", "hetero_norm"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be > 0")

    def resolve(self, g: TaskGraph, chip: ChipModel) -> "CostWeights":
        """Fill instance-derived normalizers; idempotent."""
        area = self.area_norm or float(chip.area)
        sched = self.schedule_norm
        if sched is None:
            total_conf = sum(m.conf_time or 0.0 for m in g.modules)
            sched = g.critical_path_time() + total_conf
            if sched <= 0:
                sched = 1.0
        comm = self.comm_norm
        if comm is None:
            comm = g.total_edge_weight() * (chip.width + chip.height)
            if comm <= 0:
                comm = 1.0
        return replace(self, area_norm=area, schedule_norm=sched, comm_norm=comm)


def comm_cost(p: Placement, g: TaskGraph) -> float:
    """Sum over edges of weight x Manhattan distance between rect centers."""
    total = 0.0
    for e in g.edges:
        a = p.coords[e.src]
        b = p.coords[e.dst]
        ax = a.x + (a.w - 1) / 2
        ay = a.y + (a.h - 1) / 2
        bx = b.x + (b.w - 1) / 2
        by = b.y + (b.h - 1) / 2
        total += e.weight * (abs(ax - bx) + abs(ay - by))
    return total


def _clip_to_chip(rect: Rect, chip: ChipModel):
    """Intersection of the rect with the chip, or None if disjoint."""
    x1, y1 = max(rect.x, 1), max(rect.y, 1)
    x2, y2 = min(rect.x_hi, chip.width), min(rect.y_hi, chip.height)
    if x2 < x1 or y2 < y1:
        return None
    return Rect(x1, y1, x2 - x1 + 1, y2 - y1 + 1)


def hetero_cost(p: Placement, chip: ChipModel, sentinel: float = 1000.0) -> float:
    """Chip resources divided by region-used resources, summed per kind.

    Regions hanging off the chip are clipped to it before counting; a kind
    no region uses contributes the sentinel instead of a division by zero.
    """
    used = ResourceVector()
    for box in p.region_boxes.values():
        clipped = _clip_to_chip(box, chip)
        if clipped is not None:
            used = used + chip.resources_in_window(clipped)
    have = chip.capacity()
    total = 0.0
    for have_k, use_k in zip(have.as_tuple(), used.as_tuple()):
        total += have_k / use_k if use_k > 0 else sentinel
    return total


@dataclass(frozen=True)
class CostBreakdown:
    total: float
    area: float
    schedule: float
    comm: float
    hetero: float
    makespan: float
    comm_raw: float
    hetero_raw: float
    x_max: int
    y_max: int
    feasible: bool


def total_cost(pst: PST, shapes: dict, g: TaskGraph, chip: ChipModel,
               weights: CostWeights) -> CostBreakdown:
    """Pack, schedule, and combine the four normalized cost terms.

    The area term carries the boundary-overflow penalty so infeasible
    floorplans cost strictly more than feasible ones of the same size.
    """
    w = weights if weights.area_norm is not None else weights.resolve(g, chip)
    p = pack(pst, shapes, chip)
    s = schedule(pst, g)
    return cost_from_parts(p, s, g, chip, w)


def cost_from_parts(p: Placement, s: ScheduleResult, g: TaskGraph,
                    chip: ChipModel, w: CostWeights) -> CostBreakdown:
    """Cost terms for an already packed and scheduled solution."""
    overflow = (max(0, p.x_max - chip.width) / chip.width
                + max(0, p.y_max - chip.height) / chip.height)
    cost_area = (p.x_max * p.y_max) / w.area_norm + w.boundary_penalty * overflow
    cost_schedule = s.makespan / w.schedule_norm
    raw_comm = comm_cost(p, g)
    cost_comm = raw_comm / w.comm_norm
    raw_hetero = hetero_cost(p, chip, w.hetero_sentinel)
    cost_hetero = raw_hetero / w.hetero_norm
    total = (w.alpha * cost_area + w.beta * cost_schedule
             + w.gamma_comm * cost_comm + w.lambda_ * cost_hetero)
    return CostBreakdown(
        total=total,
        area=cost_area,
        schedule=cost_schedule,
        comm=cost_comm,
        hetero=cost_hetero,
        makespan=s.makespan,
        comm_raw=raw_comm,
        hetero_raw=raw_hetero,
        x_max=p.x_max,
        y_max=p.y_max,
        feasible=p.x_max <= chip.width and p.y_max <= chip.height,
    )


@dataclass(frozen=True)
class Solution:
    """A fully evaluated solution: representation, geometry, timeline, cost."""

    pst: PST
    shapes: dict  # module id -> Shape
    placement: Placement
    timeline: ScheduleResult
    costs: CostBreakdown
    feasible: bool


def evaluate(pst: PST, shapes: dict, g: TaskGraph, chip: ChipModel,
             weights: CostWeights) -> Solution:
    """Materialize a Solution from a PST and a shape assignment."""
    w = weights if weights.area_norm is not None else weights.resolve(g, chip)
    p = pack(pst, shapes, chip)
    s = schedule(pst, g)
    costs = cost_from_parts(p, s, g, chip, w)
    return Solution(pst=pst, shapes=dict(shapes), placement=p, timeline=s,
                    costs=costs, feasible=costs.feasible)

"""Simulated-annealing search over partition, schedule, and floorplan.

Each move deletes one module and reinserts it somewhere else: into an
existing layer, into a fresh layer of an existing region, or into a fresh
region.  Insertion points are first ranked by a cheap rough score (area
and schedule estimates; the moved module's shape is reselected from its
candidate list at the same time), then the best few are re-costed exactly
and the winner goes through the usual Metropolis acceptance test.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field

from .chip import ChipModel
from .errors import InfeasibleModuleError
from .pst import (CostWeights, PST, Solution, evaluate, pack, schedule,
                  total_cost)
from .shapes import Shape, ShapeList
from .taskgraph import TaskGraph

# exp(-median/T0) = 0.8 fixes the probe-derived starting temperature.
_PROBE_ACCEPT = -math.log(0.8)


@dataclass(frozen=True)
class SAConfig:
    """Annealing schedule and move-evaluation parameters.

    None values are resolved per instance: the initial temperature from
    100 probe moves (median uphill cost accepted with probability 0.8),
    iterations_per_temperature as max(16, 2 x modules), min_temperature
    as 1e-3 x initial.
    """

    initial_temperature: float | None = None
    cooling_rate: float = 0.9
    iterations_per_temperature: int | None = None
    min_temperature: float | None = None
    rough_keep_k: int = 5
    restarts: int = 1
    seed: int = 0
    weights: CostWeights = field(default_factory=CostWeights)
    max_candidates: int = 96
    probe_moves: int = 100
    time_limit: float | None = None
    exact_rough: bool = False
    validate_every_step: bool = False

    def __post_init__(self):
        if not 0.0 < self.cooling_rate < 1.0:
            raise ValueError("cooling_rate must be in (0, 1)")
        if self.rough_keep_k < 1:
            raise ValueError("rough_keep_k must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if (self.iterations_per_temperature is not None
                and self.iterations_per_temperature < 1):
            raise ValueError("iterations_per_temperature must be >= 1")


@dataclass
class Candidate:
    """One insertion point for the deleted module."""

    layer: tuple  # (region, layer id)
    ps_pos: int
    qs_pos: int
    rs_pos: int
    new_layer: bool
    new_region: bool
    shape: Shape | None = None
    score: float = math.inf


@dataclass(frozen=True)
class TraceRow:
    restart: int
    iteration: int
    temperature: float
    current_cost: float
    best_cost: float


def initial_solution(g: TaskGraph, shape_lists: dict, chip: ChipModel) -> PST:
    """Greedy row construction: one region, layers filled in topo order.

    Modules join the current layer as a left-to-right row until the row
    would outgrow the chip width, then a new layer opens; rs keeps layer
    creation order, so dependencies always point forward.
    """
    order = g.topological_order()
    if not order:
        raise InfeasibleModuleError("cannot build a solution for an empty graph")
    layers = [[]]
    row_width = 0
    for m in order:
        w = shape_lists[m].min_area_shape().w
        if w > chip.width:
            raise InfeasibleModuleError(f"module {m} wider than the chip")
        if layers[-1] and row_width + w > chip.width:
            layers.append([])
            row_width = 0
        layers[-1].append(m)
        row_width += w
    partition = {}
    rs = []
    for idx, members in enumerate(layers):
        key = (0, idx)
        rs.append(key)
        for m in members:
            partition[m] = key
    seq = [m for members in layers for m in members]
    return PST(ps=seq, qs=seq, rs=rs, partition=partition)


def _block_spans(seq, keyof):
    spans: dict = {}
    for i, m in enumerate(seq):
        k = keyof(m)
        if k in spans:
            spans[k][1] = i
        else:
            spans[k] = [i, i]
    return spans


def enumerate_insertions(pst: PST, m: str, g: TaskGraph | None = None) -> list:
    """Every structurally valid reinsertion point for module m.

    Existing layers are offered at every (ps, qs) slot pair inside the
    layer block; each region offers a fresh layer appended to its block at
    every configuration-order position; a fresh region is offered at the
    four sequence corners.  With g given, positions violating dependency
    order are dropped.
    """
    if m in pst.partition:
        raise ValueError(f"module {m} must be deleted before reinsertion")
    layer_ps = _block_spans(pst.ps, lambda x: pst.partition[x])
    layer_qs = _block_spans(pst.qs, lambda x: pst.partition[x])
    region_ps = _block_spans(pst.ps, lambda x: pst.partition[x][0])
    region_qs = _block_spans(pst.qs, lambda x: pst.partition[x][0])
    rs_index = {key: i for i, key in enumerate(pst.rs)}

    max_pred, min_succ = -1, len(pst.rs)
    if g is not None:
        for p in g.predecessors[m]:
            if p in pst.partition:
                max_pred = max(max_pred, rs_index[pst.partition[p]])
        for s in g.successors[m]:
            if s in pst.partition:
                min_succ = min(min_succ, rs_index[pst.partition[s]])

    cands = []
    for key in pst.rs:
        t = rs_index[key]
        if not max_pred <= t <= min_succ:
            continue
        a, b = layer_ps[key]
        c, d = layer_qs[key]
        for i in range(a, b + 2):
            for j in range(c, d + 2):
                cands.append(Candidate(layer=key, ps_pos=i, qs_pos=j,
                                       rs_pos=t, new_layer=False,
                                       new_region=False))
    # New layers go at the end of the region's block; dependency-wise the
    # fresh layer may take any rs slot after every predecessor's layer.
    rs_lo, rs_hi = max_pred + 1, min_succ
    for region in sorted(region_ps):
        next_l = 1 + max(k[1] for k in rs_index if k[0] == region)
        key = (region, next_l)
        i = region_ps[region][1] + 1
        j = region_qs[region][1] + 1
        for p in range(rs_lo, rs_hi + 1):
            cands.append(Candidate(layer=key, ps_pos=i, qs_pos=j, rs_pos=p,
                                   new_layer=True, new_region=False))
    new_region = 1 + max((k[0] for k in rs_index), default=-1)
    corners = sorted({(i, j) for i in (0, len(pst.ps)) for j in (0, len(pst.qs))})
    for i, j in corners:
        for p in range(rs_lo, rs_hi + 1):
            cands.append(Candidate(layer=(new_region, 0), ps_pos=i, qs_pos=j,
                                   rs_pos=p, new_layer=True, new_region=True))
    return cands


def apply_candidate(pst: PST, m: str, cand: Candidate) -> PST:
    """PST with module m inserted according to the candidate descriptor."""
    ps = list(pst.ps)
    ps.insert(cand.ps_pos, m)
    qs = list(pst.qs)
    qs.insert(cand.qs_pos, m)
    partition = dict(pst.partition)
    partition[m] = cand.layer
    rs = list(pst.rs)
    if cand.new_layer:
        rs.insert(cand.rs_pos, cand.layer)
    return PST(ps=ps, qs=qs, rs=rs, partition=partition)


class RoughEvaluator:
    """Linear-time scores for insertion candidates of one deleted module.

    Approximate mode treats each region as a rigid block: the candidate
    only resizes its target region, so the whole-design extents become
    max(A, B + size) with A/B cached per region from one longest-path
    sweep over the region-level relation graph.  The schedule estimate
    runs the configuration recurrence at layer granularity, ignoring
    cross-layer execution dependencies.  Exact mode packs and schedules
    for real and is used by tests as the reference.
    """

    def __init__(self, pst: PST, shapes: dict, g: TaskGraph, chip: ChipModel,
                 weights: CostWeights, moved: str):
        self.pst = pst
        self.shapes = shapes
        self.g = g
        self.chip = chip
        self.w = weights
        self.moved = moved
        self.placement = pack(pst, shapes, chip)
        self.x_base = self.placement.x_max
        self.y_base = self.placement.y_max

        self.layer_w: dict = {}
        self.layer_h: dict = {}
        for key, members in pst.layer_members.items():
            xs = [self.placement.coords[x] for x in members]
            self.layer_w[key] = max(r.x_hi for r in xs) - min(r.x for r in xs) + 1
            self.layer_h[key] = max(r.y_hi for r in xs) - min(r.y for r in xs) + 1

        self.region_w = {r: box.w for r, box in self.placement.region_boxes.items()}
        self.region_h = {r: box.h for r, box in self.placement.region_boxes.items()}

        self.conf_sum: dict = {}
        self.exec_max: dict = {}
        for key, members in pst.layer_members.items():
            self.conf_sum[key] = sum(g.module(x).conf_time or 0.0 for x in members)
            self.exec_max[key] = max(g.module(x).exec_time for x in members)
        mod = g.module(moved)
        self.moved_conf = mod.conf_time or 0.0
        self.moved_exec = mod.exec_time

        # Region-level relation edges, from block order in ps and qs.
        # Horizontal edges run along ps block order, vertical ones along qs.
        region_ps = _block_spans(pst.ps, lambda x: pst.partition[x][0])
        region_qs = _block_spans(pst.qs, lambda x: pst.partition[x][0])
        self.regions = sorted(region_ps)
        self.order_ps = sorted(self.regions, key=lambda r: region_ps[r][0])
        self.order_qs = sorted(self.regions, key=lambda r: region_qs[r][0])
        self.h_edges = []  # (a, b): a left of b
        self.v_edges = []  # (a, b): a below b
        for a in self.regions:
            for b in self.regions:
                if a == b:
                    continue
                if (region_ps[a][1] < region_ps[b][0]
                        and region_qs[a][1] < region_qs[b][0]):
                    self.h_edges.append((a, b))
                elif (region_ps[a][0] > region_ps[b][1]
                        and region_qs[a][1] < region_qs[b][0]):
                    self.v_edges.append((a, b))
        self._extent_cache: dict = {}

    def _extent_coeffs(self, r, edges, sizes, order):
        """(A, B) such that the extent as a function of r's size is max(A, B + size).

        a_of[s]: longest entry path into s over chains avoiding r;
        d_of[s]: longest chain from r's exit into s;  processing follows
        the topological block order, so one sweep suffices.
        """
        preds: dict = {s: [] for s in self.regions}
        for a, b in edges:
            preds[b].append(a)
        a_of: dict = {}
        d_of: dict = {}
        for s in order:
            best_a = 0.0
            best_d = -math.inf
            if s != r:
                for p in preds[s]:
                    if p == r:
                        best_d = max(best_d, 0.0)
                        continue
                    best_a = max(best_a, a_of[p] + sizes[p])
                    if d_of[p] > -math.inf:
                        best_d = max(best_d, d_of[p] + sizes[p])
            a_of[s] = best_a
            d_of[s] = best_d
        best_a_r = 0.0
        for p in preds[r]:
            best_a_r = max(best_a_r, a_of[p] + sizes[p])
        A = 0.0
        through = 0.0
        for s in self.regions:
            if s == r:
                continue
            A = max(A, a_of[s] + sizes[s])
            if d_of[s] > -math.inf:
                through = max(through, d_of[s] + sizes[s])
        return A, best_a_r + through

    def _region_coeffs(self, r):
        if r not in self._extent_cache:
            ax, bx = self._extent_coeffs(r, self.h_edges, self.region_w,
                                         self.order_ps)
            ay, by = self._extent_coeffs(r, self.v_edges, self.region_h,
                                         self.order_qs)
            self._extent_cache[r] = (ax, bx, ay, by)
        return self._extent_cache[r]

    def _sched_estimate(self, cand: Candidate) -> float:
        rs = list(self.pst.rs)
        conf = dict(self.conf_sum)
        emax = dict(self.exec_max)
        if cand.new_layer:
            rs.insert(cand.rs_pos, cand.layer)
            conf[cand.layer] = self.moved_conf
            emax[cand.layer] = self.moved_exec
        else:
            conf[cand.layer] = conf[cand.layer] + self.moved_conf
            emax[cand.layer] = max(emax[cand.layer], self.moved_exec)
        port = 0.0
        region_end: dict = {}
        makespan = 0.0
        for key in rs:
            start = max(port, region_end.get(key[0], 0.0))
            end = start + conf[key]
            port = end
            layer_end = end + emax[key]
            region_end[key[0]] = layer_end
            if layer_end > makespan:
                makespan = layer_end
        return makespan

    def _approx_extents(self, cand: Candidate, shape: Shape):
        if cand.new_region:
            if cand.ps_pos == cand.qs_pos or not self.pst.ps:
                # left/right corner: the fresh region extends the row
                x = self.x_base + shape.w
                y = max(self.y_base, shape.h)
            else:
                x = max(self.x_base, shape.w)
                y = self.y_base + shape.h
            return x, y
        region = cand.layer[0]
        if cand.new_layer:
            rw = max(self.region_w[region], shape.w)
            rh = max(self.region_h[region], shape.h)
        else:
            lw, lh = self.layer_w[cand.layer], self.layer_h[cand.layer]
            side = (lw + shape.w, max(lh, shape.h))
            stack = (max(lw, shape.w), lh + shape.h)
            ew, eh = min(side, stack, key=lambda t: t[0] * t[1])
            other_w = max((self.layer_w[k] for k in self.pst.region_layers[region]
                           if k != cand.layer), default=0)
            other_h = max((self.layer_h[k] for k in self.pst.region_layers[region]
                           if k != cand.layer), default=0)
            rw = max(other_w, ew)
            rh = max(other_h, eh)
        ax, bx, ay, by = self._region_coeffs(region)
        return max(ax, bx + rw), max(ay, by + rh)

    def evaluate(self, cand: Candidate, shape_list: ShapeList,
                 exact: bool = False):
        """Choose the best shape for this candidate and score it.

        The shape minimizes the estimated whole-design area (ties: smaller
        shape area); the score adds the schedule estimate with the cost
        weights, both normalized.
        """
        best = None
        if exact:
            for shape in shape_list.shapes:
                new_pst = apply_candidate(self.pst, self.moved, cand)
                shapes = dict(self.shapes)
                shapes[self.moved] = shape
                p = pack(new_pst, shapes, self.chip)
                s = schedule(new_pst, self.g)
                key = (p.x_max * p.y_max, shape.area)
                if best is None or key < best[0]:
                    best = (key, shape, p.x_max * p.y_max, s.makespan)
        else:
            sched_est = self._sched_estimate(cand)
            for shape in shape_list.shapes:
                x, y = self._approx_extents(cand, shape)
                key = (x * y, shape.area)
                if best is None or key < best[0]:
                    best = (key, shape, x * y, sched_est)
        _, shape, area_est, sched_est = best
        score = (self.w.alpha * area_est / self.w.area_norm
                 + self.w.beta * sched_est / self.w.schedule_norm)
        return shape, score


def accurate_evaluate(pst_without: PST, m: str, cands: list, shapes: dict,
                      g: TaskGraph, chip: ChipModel, weights: CostWeights):
    """Apply each candidate, compute the full cost, return the argmin.

    Returns (pst, shapes, cost, candidate) of the cheapest candidate.
    """
    if not cands:
        raise ValueError("accurate_evaluate needs at least one candidate")
    best = None
    for cand in cands:
        new_pst = apply_candidate(pst_without, m, cand)
        new_shapes = dict(shapes)
        new_shapes[m] = cand.shape
        cost = total_cost(new_pst, new_shapes, g, chip, weights)
        if best is None or cost.total < best[2].total:
            best = (new_pst, new_shapes, cost, cand)
    return best


def accept_move(delta: float, temperature: float, rng: random.Random) -> bool:
    """Metropolis rule: always downhill, uphill with probability e^(-d/T)."""
    if delta <= 0:
        return True
    if temperature <= 0:
        return False
    exponent = delta / temperature
    if exponent > 700:  # exp underflows anyway
        return False
    return rng.random() < math.exp(-exponent)


class _Chain:
    """One annealing run with its own RNG and state."""

    def __init__(self, g, shape_lists, chip, cfg, weights, seed, deadline):
        self.g = g
        self.lists = shape_lists
        self.chip = chip
        self.cfg = cfg
        self.w = weights
        self.rng = random.Random(seed)
        self.deadline = deadline
        self.ids = list(g.module_ids)
        self.pst = initial_solution(g, shape_lists, chip)
        self.shapes = {m: shape_lists[m].min_area_shape() for m in self.ids}
        self.cost = total_cost(self.pst, self.shapes, g, chip, weights)
        self.best = (self.pst, self.shapes, self.cost)
        self.best_feasible = self.best if self.cost.feasible else None

    def _track(self, pst, shapes, cost):
        if cost.total < self.best[2].total:
            self.best = (pst, shapes, cost)
        if cost.feasible and (self.best_feasible is None
                              or cost.total < self.best_feasible[2].total):
            self.best_feasible = (pst, shapes, cost)

    def _random_move(self):
        """Delete a random module and pick rough-ranked reinsertions."""
        m = self.rng.choice(self.ids)
        without = self.pst.without(m)
        cands = enumerate_insertions(without, m, self.g)
        if len(cands) > self.cfg.max_candidates:
            cands = self.rng.sample(cands, self.cfg.max_candidates)
        rough = RoughEvaluator(without, self.shapes, self.g, self.chip,
                               self.w, m)
        for cand in cands:
            cand.shape, cand.score = rough.evaluate(
                cand, self.lists[m], exact=self.cfg.exact_rough)
        cands.sort(key=lambda c: c.score)
        return m, without, cands[:self.cfg.rough_keep_k]

    def initial_temperature(self):
        if self.cfg.initial_temperature is not None:
            return self.cfg.initial_temperature
        deltas = []
        for _ in range(self.cfg.probe_moves):
            m, without, top = self._random_move()
            cand = self.rng.choice(top)
            _, _, cost, _ = accurate_evaluate(without, m, [cand], self.shapes,
                                              self.g, self.chip, self.w)
            d = abs(cost.total - self.cost.total)
            if d > 1e-12:
                deltas.append(d)
        if not deltas:
            return 1.0
        deltas.sort()
        return deltas[len(deltas) // 2] / _PROBE_ACCEPT

    def run(self, restart_idx, trace):
        t = self.initial_temperature()
        t_min = (self.cfg.min_temperature if self.cfg.min_temperature is not None
                 else 1e-3 * t)
        iters = (self.cfg.iterations_per_temperature
                 if self.cfg.iterations_per_temperature is not None
                 else max(16, 2 * len(self.ids)))
        iteration = 0
        while t > t_min:
            for _ in range(iters):
                if self.deadline is not None and time.monotonic() > self.deadline:
                    return
                m, without, top = self._random_move()
                new_pst, new_shapes, cost, _ = accurate_evaluate(
                    without, m, top, self.shapes, self.g, self.chip, self.w)
                if self.cfg.validate_every_step:
                    from .pst import validate
                    problems = validate(new_pst, self.g)
                    if problems:
                        raise AssertionError(f"invalid move: {problems}")
                self._track(new_pst, new_shapes, cost)
                if accept_move(cost.total - self.cost.total, t, self.rng):
                    self.pst, self.shapes, self.cost = new_pst, new_shapes, cost
                iteration += 1
                trace.append(TraceRow(restart_idx, iteration, t,
                                      self.cost.total, self.best[2].total))
            t *= self.cfg.cooling_rate


def anneal(g: TaskGraph, shape_lists: dict, chip: ChipModel,
           cfg: SAConfig = SAConfig()):
    """Run the annealing chains and return (Solution, trace rows).

    Deterministic for fixed inputs and seed.  The returned solution is the
    best boundary-feasible one found; if no chain ever saw a feasible
    floorplan, the lowest-cost (least violating) solution is returned with
    feasible=False, ready for post-optimization.
    """
    if g.has_unresolved_conf():
        raise ValueError("anneal needs resolved configuration times; "
                         "apply assign_conf_times first")
    weights = cfg.weights.resolve(g, chip)
    deadline = (time.monotonic() + cfg.time_limit
                if cfg.time_limit is not None else None)
    trace: list = []
    best = None
    best_feasible = None
    for k in range(cfg.restarts):
        chain = _Chain(g, shape_lists, chip, cfg, weights, cfg.seed + k,
                       deadline)
        chain.run(k, trace)
        if best is None or chain.best[2].total < best[2].total:
            best = chain.best
        if chain.best_feasible is not None and (
                best_feasible is None
                or chain.best_feasible[2].total < best_feasible[2].total):
            best_feasible = chain.best_feasible
    pick = best_feasible if best_feasible is not None else best
    pst, shapes, _ = pick
    return evaluate(pst, shapes, g, chip, weights), trace

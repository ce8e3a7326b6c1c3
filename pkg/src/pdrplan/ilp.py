"""Shape reselection as an exact 0/1 program, solved by branch and bound.

The partition, configuration order, and sequence-pair relations of a
solution stay fixed; only the per-module shape choice varies.  One-hot
selection rows pick a shape per module, module widths/heights become
linear expressions of the selectors, sequence-pair relations turn into
pairwise coordinate constraints, and the occupied extents are maximized
away from the chip boundary: maximize (Width - Xmax) + (Height - Ymax).

The bundled solver branches on the selection rows and bounds extents via
longest paths over per-module minimum remaining widths/heights, which
never overestimate any completion.  export_lp writes the very same model
in CPLEX LP text form for use with external solvers.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

from .chip import ChipModel
from .pst import CostWeights, PST, Solution, evaluate
from .taskgraph import TaskGraph


@dataclass(frozen=True)
class ShapeSelection:
    """Chosen shape index per module (a one-hot row per module)."""

    choices: dict  # module id -> index into its shape list

    def matrix(self, model: "ILPModel") -> list:
        """Dense 0/1 rows in model module order (ragged by list length)."""
        return [[1 if j == self.choices[m] else 0
                 for j in range(len(model.shape_dims[m]))]
                for m in model.modules]


@dataclass(frozen=True)
class LinearConstraint:
    name: str
    coeffs: tuple  # ((var, coefficient), ...)
    sense: str  # '<=', '>=' or '='
    rhs: float


@dataclass(frozen=True)
class ILPModel:
    """Shape-reselection program, both structured and in matrix form.

    The structured fields (pairs, dims) drive the bundled solver; the
    generic constraint list is what export_lp writes and mirrors the
    structured form one to one.
    """

    modules: tuple  # module ids in sequence order
    shape_dims: dict  # module id -> tuple of (w, h)
    h_pairs: tuple  # (a, b): x_b >= x_a + w_a
    v_pairs: tuple  # (a, b): y_b >= y_a + h_a
    width: int
    height: int
    constraints: tuple
    objective: tuple  # ((var, coefficient), ...), maximized
    objective_const: float
    binaries: tuple


@dataclass(frozen=True)
class SolveResult:
    status: str  # 'optimal', 'infeasible' or 'timeout'
    selection: ShapeSelection | None
    objective: float | None
    nodes: int
    wall_time: float


def sequence_pair_relations(pst: PST):
    """Filtered pairwise relations: (horizontal, vertical) ordered pairs.

    (a, b) is horizontal when a precedes b in both sequences, vertical
    when a follows b in ps but precedes it in qs; pairs of the same
    region in different layers are unconstrained.
    """
    qpos = {m: i for i, m in enumerate(pst.qs)}
    part = pst.partition
    h_pairs = []
    v_pairs = []
    n = len(pst.ps)
    for jx in range(n):
        b = pst.ps[jx]
        for ix in range(jx):
            a = pst.ps[ix]
            if part[a][0] == part[b][0] and part[a] != part[b]:
                continue
            if qpos[a] < qpos[b]:
                h_pairs.append((a, b))
            else:
                v_pairs.append((b, a))
    return h_pairs, v_pairs


def build_model(pst: PST, shape_lists: dict, chip: ChipModel) -> ILPModel:
    """Assemble the reselection program for a fixed PST."""
    modules = tuple(pst.ps)
    dims = {}
    for m in modules:
        sl = shape_lists.get(m)
        if sl is None or not sl.shapes:
            raise ValueError(f"module {m} has no candidate shapes")
        dims[m] = tuple((s.w, s.h) for s in sl.shapes)
    h_pairs, v_pairs = sequence_pair_relations(pst)
    index = {m: i + 1 for i, m in enumerate(modules)}

    cons = []
    binaries = []
    for m in modules:
        i = index[m]
        row = [(f"ms_{i}_{j + 1}", 1) for j in range(len(dims[m]))]
        binaries.extend(name for name, _ in row)
        cons.append(LinearConstraint(f"onehot_{i}", tuple(row), "=", 1))
        wdef = [(f"w_{i}", 1)] + [(f"ms_{i}_{j + 1}", -w)
                                  for j, (w, _) in enumerate(dims[m])]
        cons.append(LinearConstraint(f"wdef_{i}", tuple(wdef), "=", 0))
        hdef = [(f"h_{i}", 1)] + [(f"ms_{i}_{j + 1}", -h)
                                  for j, (_, h) in enumerate(dims[m])]
        cons.append(LinearConstraint(f"hdef_{i}", tuple(hdef), "=", 0))
    for a, b in h_pairs:
        ia, ib = index[a], index[b]
        cons.append(LinearConstraint(
            f"hpos_{ia}_{ib}",
            ((f"x_{ib}", 1), (f"x_{ia}", -1), (f"w_{ia}", -1)), ">=", 0))
    for a, b in v_pairs:
        ia, ib = index[a], index[b]
        cons.append(LinearConstraint(
            f"vpos_{ia}_{ib}",
            ((f"y_{ib}", 1), (f"y_{ia}", -1), (f"h_{ia}", -1)), ">=", 0))
    for m in modules:
        i = index[m]
        cons.append(LinearConstraint(
            f"xext_{i}", (("Xmax", 1), (f"x_{i}", -1), (f"w_{i}", -1)), ">=", 0))
        cons.append(LinearConstraint(
            f"yext_{i}", (("Ymax", 1), (f"y_{i}", -1), (f"h_{i}", -1)), ">=", 0))
    cons.append(LinearConstraint("bound_x", (("Xmax", 1),), "<=", chip.width))
    cons.append(LinearConstraint("bound_y", (("Ymax", 1),), "<=", chip.height))

    return ILPModel(
        modules=modules,
        shape_dims=dims,
        h_pairs=tuple(h_pairs),
        v_pairs=tuple(v_pairs),
        width=chip.width,
        height=chip.height,
        constraints=tuple(cons),
        objective=(("Xmax", -1), ("Ymax", -1)),
        objective_const=float(chip.width + chip.height),
        binaries=tuple(binaries),
    )


# ----------------------------------------------------------------------
# bundled exact solver

class _Search:
    def __init__(self, model: ILPModel, time_limit):
        self.model = model
        self.modules = model.modules
        self.n = len(self.modules)
        self.idx = {m: i for i, m in enumerate(self.modules)}
        self.dims = [model.shape_dims[m] for m in self.modules]
        self.h_preds = [[] for _ in range(self.n)]
        self.v_preds = [[] for _ in range(self.n)]
        for a, b in model.h_pairs:
            self.h_preds[self.idx[b]].append(self.idx[a])
        for a, b in model.v_pairs:
            self.v_preds[self.idx[b]].append(self.idx[a])
        # Longest paths are evaluated in dependency order: horizontal
        # relations follow ps order (model order); vertical ones need a
        # topological order of their own.
        self.h_order = list(range(self.n))
        self.v_order = self._topo(self.v_preds)
        self.deadline = (time.monotonic() + time_limit
                         if time_limit is not None else None)
        self.nodes = 0
        self.best_key = None  # (objective, -total area), maximized
        self.best_choice = None
        self.timed_out = False

    def _topo(self, preds):
        indeg = [0] * self.n
        succ = [[] for _ in range(self.n)]
        for b in range(self.n):
            for a in preds[b]:
                indeg[b] += 1
                succ[a].append(b)
        ready = [i for i in range(self.n) if indeg[i] == 0]
        order = []
        while ready:
            i = ready.pop()
            order.append(i)
            for b in succ[i]:
                indeg[b] -= 1
                if indeg[b] == 0:
                    ready.append(b)
        return order

    def _extent(self, order, preds, size):
        """Longest-path extent plus a module on the critical path."""
        pos = [0] * self.n
        for i in order:
            best = 0
            for p in preds[i]:
                v = pos[p] + size[p]
                if v > best:
                    best = v
            pos[i] = best
        ext = 0
        arg = -1
        for i in range(self.n):
            v = pos[i] + size[i]
            if v > ext:
                ext = v
                arg = i
        return ext, arg, pos

    def _critical_modules(self, arg, preds, pos, size):
        path = []
        cur = arg
        while True:
            path.append(cur)
            if pos[cur] == 0:
                return path
            for p in preds[cur]:
                if pos[p] + size[p] == pos[cur]:
                    cur = p
                    break

    def _bound(self, allowed):
        wmin = [min(self.dims[i][j][0] for j in allowed[i]) for i in range(self.n)]
        hmin = [min(self.dims[i][j][1] for j in allowed[i]) for i in range(self.n)]
        xext, xarg, xpos = self._extent(self.h_order, self.h_preds, wmin)
        yext, yarg, ypos = self._extent(self.v_order, self.v_preds, hmin)
        return xext, yext, (xarg, xpos, wmin), (yarg, ypos, hmin)

    def _area_lb(self, allowed):
        return sum(min(w * h for w, h in (self.dims[i][j] for j in allowed[i]))
                   for i in range(self.n))

    def try_assignment(self, choice):
        """Evaluate a full assignment; update the incumbent if feasible."""
        w = [self.dims[i][choice[i]][0] for i in range(self.n)]
        h = [self.dims[i][choice[i]][1] for i in range(self.n)]
        xext, _, _ = self._extent(self.h_order, self.h_preds, w)
        yext, _, _ = self._extent(self.v_order, self.v_preds, h)
        if xext > self.model.width or yext > self.model.height:
            return
        obj = (self.model.width - xext) + (self.model.height - yext)
        area = sum(wi * hi for wi, hi in zip(w, h))
        key = (obj, -area)
        if self.best_key is None or key > self.best_key:
            self.best_key = key
            self.best_choice = list(choice)

    def dfs(self, allowed):
        if self.deadline is not None and time.monotonic() > self.deadline:
            self.timed_out = True
            return
        self.nodes += 1
        xext, yext, xinfo, yinfo = self._bound(allowed)
        if xext > self.model.width or yext > self.model.height:
            return  # no completion fits the boundary
        ub = (self.model.width - xext) + (self.model.height - yext)
        if self.best_key is not None:
            ub_key = (ub, -self._area_lb(allowed))
            if ub_key <= self.best_key:
                return
        if all(len(a) == 1 for a in allowed):
            self.try_assignment([a[0] for a in allowed])
            return
        branch = self._pick_branch(allowed, xext, yext, xinfo, yinfo)
        x_binding = xext / self.model.width >= yext / self.model.height
        dim = 0 if x_binding else 1
        shape_order = sorted(allowed[branch],
                             key=lambda j: (self.dims[branch][j][dim],
                                            self.dims[branch][j][1 - dim]))
        for j in shape_order:
            saved = allowed[branch]
            allowed[branch] = [j]
            self.dfs(allowed)
            allowed[branch] = saved
            if self.timed_out:
                return

    def _pick_branch(self, allowed, xext, yext, xinfo, yinfo):
        """Prefer undecided modules on the binding critical path."""
        x_binding = xext / self.model.width >= yext / self.model.height
        infos = (xinfo, yinfo) if x_binding else (yinfo, xinfo)
        preds = ((self.h_preds, self.v_preds) if x_binding
                 else (self.v_preds, self.h_preds))
        for (arg, pos, size), pred in zip(infos, preds):
            if arg < 0:
                continue
            for i in self._critical_modules(arg, pred, pos, size):
                if len(allowed[i]) > 1:
                    return i
        for i in range(self.n):
            if len(allowed[i]) > 1:
                return i
        raise AssertionError("no branchable module at an interior node")


def solve(model: ILPModel, time_limit: float | None = None) -> SolveResult:
    """Exact optimum of the reselection program, or timeout incumbent.

    Seeds the incumbent with two greedy assignments (all minimum-area
    shapes; per-module least normalized half-perimeter), then runs
    depth-first branch and bound.  Deterministic for a fixed model.
    """
    start = time.monotonic()
    search = _Search(model, time_limit)
    n = len(model.modules)
    if n:
        min_area = [min(range(len(search.dims[i])),
                        key=lambda j: (search.dims[i][j][0] * search.dims[i][j][1], j))
                    for i in range(n)]
        search.try_assignment(min_area)
        balanced = [min(range(len(search.dims[i])),
                        key=lambda j: (search.dims[i][j][0] / model.width
                                       + search.dims[i][j][1] / model.height, j))
                    for i in range(n)]
        search.try_assignment(balanced)
    search.dfs([list(range(len(search.dims[i]))) for i in range(n)])
    wall = time.monotonic() - start
    if search.timed_out:
        status = "timeout"
    elif search.best_key is None:
        status = "infeasible"
    else:
        status = "optimal"
    selection = None
    objective = None
    if search.best_choice is not None:
        selection = ShapeSelection(
            {m: search.best_choice[i] for i, m in enumerate(model.modules)})
        objective = float(search.best_key[0])
    return SolveResult(status=status, selection=selection, objective=objective,
                       nodes=search.nodes, wall_time=wall)


def brute_force_objective(model: ILPModel):
    """Exhaustive reference: best (objective, selection) or None.

    Only sensible for a handful of modules; tests use it as the oracle.
    """
    search = _Search(model, None)
    best = None
    for combo in itertools.product(*(range(len(d)) for d in search.dims)):
        w = [search.dims[i][combo[i]][0] for i in range(search.n)]
        h = [search.dims[i][combo[i]][1] for i in range(search.n)]
        xext, _, _ = search._extent(search.h_order, search.h_preds, w)
        yext, _, _ = search._extent(search.v_order, search.v_preds, h)
        if xext > model.width or yext > model.height:
            continue
        obj = (model.width - xext) + (model.height - yext)
        area = sum(wi * hi for wi, hi in zip(w, h))
        if best is None or (obj, -area) > best[0]:
            best = ((obj, -area), combo)
    if best is None:
        return None
    (obj, _), combo = best
    return float(obj), ShapeSelection(
        {m: combo[i] for i, m in enumerate(model.modules)})


# ----------------------------------------------------------------------
# LP export

def _fmt(v) -> str:
    if isinstance(v, float) and v.is_integer():
        v = int(v)
    return str(v)


def _expr(coeffs) -> str:
    parts = []
    for var, c in coeffs:
        if c < 0:
            parts.append(f"- {_fmt(-c) + ' ' if c != -1 else ''}{var}")
        else:
            parts.append(f"+ {_fmt(c) + ' ' if c != 1 else ''}{var}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def export_lp(model: ILPModel) -> str:
    """CPLEX LP text of the model; byte-stable for a fixed input."""
    lines = ["\\ shape reselection model", "Maximize"]
    obj = _expr(model.objective)
    if model.objective_const:
        obj += f" + {_fmt(model.objective_const)}"
    lines.append(f" obj: {obj}")
    lines.append("Subject To")
    sense_map = {"<=": "<=", ">=": ">=", "=": "="}
    for con in model.constraints:
        lines.append(f" {con.name}: {_expr(con.coeffs)} "
                     f"{sense_map[con.sense]} {_fmt(con.rhs)}")
    lines.append("Bounds")
    lines.append("Binary")
    lines.append(" " + " ".join(model.binaries))
    lines.append("End")
    return "\n".join(lines) + "\n"


def apply(pst: PST, selection: ShapeSelection, shape_lists: dict,
          g: TaskGraph, chip: ChipModel, weights: CostWeights) -> Solution:
    """Re-pack, re-schedule, and re-cost under the selected shapes.

    The PST is untouched; only shapes change.  A solve() optimum must
    re-pack inside the boundary (the pairwise constraints dominate the
    longest-path recurrence), so a violation here is a solver bug.
    """
    shapes = {m: shape_lists[m].shapes[j] for m, j in selection.choices.items()}
    sol = evaluate(pst, shapes, g, chip, weights)
    if not sol.feasible:
        raise RuntimeError(
            "internal solver error: optimal selection re-packs outside the chip "
            f"({sol.placement.x_max}x{sol.placement.y_max})")
    return sol

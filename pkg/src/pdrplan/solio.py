"""Solution file format: explorer output, post-optimizer input.

Line-oriented UTF-8 text.  ps/qs/rs lines carry the sequence triple
(layer keys as region.layer), one place line per module carries its
partition slot, coordinates, and shape, and a metrics line summarizes the
evaluated costs.  Geometry and metrics are recomputed on load; the
authoritative content is the triple, the partition, and the shapes.
"""

from __future__ import annotations

from pathlib import Path

from .chip import ChipModel
from .errors import InputFileError
from .pst import CostWeights, PST, Solution, evaluate
from .shapes import Shape
from .taskgraph import TaskGraph


def _fmt_layer(key) -> str:
    return f"{key[0]}.{key[1]}"


def _parse_layer(tok: str, source: str, lineno: int):
    try:
        r, l = tok.split(".")
        return (int(r), int(l))
    except ValueError:
        raise InputFileError(
            f"{source}:{lineno}: bad layer key {tok!r} (expected region.layer)"
        ) from None


def write_solution(sol: Solution) -> str:
    """Serialize a solution; byte-stable for equal solutions."""
    lines = [
        "ps " + " ".join(sol.pst.ps),
        "qs " + " ".join(sol.pst.qs),
        "rs " + " ".join(_fmt_layer(k) for k in sol.pst.rs),
    ]
    for m in sol.pst.ps:
        r = sol.placement.coords[m]
        region, layer = sol.pst.partition[m]
        lines.append(f"place {m} region={region} layer={layer} "
                     f"x={r.x} y={r.y} w={r.w} h={r.h}")
    c = sol.costs
    lines.append(
        f"metrics makespan={c.makespan!r} total={c.total!r} area={c.area!r} "
        f"schedule={c.schedule!r} comm={c.comm!r} hetero={c.hetero!r} "
        f"x_max={c.x_max} y_max={c.y_max} feasible={int(c.feasible)}")
    return "\n".join(lines) + "\n"


def parse_solution(text: str, source: str = "<solution>"):
    """(PST, shapes, metrics) from solution text; geometry is not trusted."""
    ps = qs = rs = None
    partition = {}
    shapes = {}
    metrics = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind = tokens[0]
        if kind == "ps":
            ps = tuple(tokens[1:])
        elif kind == "qs":
            qs = tuple(tokens[1:])
        elif kind == "rs":
            rs = tuple(_parse_layer(t, source, lineno) for t in tokens[1:])
        elif kind == "place":
            if len(tokens) < 2:
                raise InputFileError(f"{source}:{lineno}: place needs a module id")
            mid = tokens[1]
            kv = {}
            for tok in tokens[2:]:
                if "=" not in tok:
                    raise InputFileError(
                        f"{source}:{lineno}: expected key=value, got {tok!r}")
                k, v = tok.split("=", 1)
                try:
                    kv[k] = int(v)
                except ValueError:
                    raise InputFileError(
                        f"{source}:{lineno}: bad value {v!r} for {k}") from None
            missing = [k for k in ("region", "layer", "w", "h") if k not in kv]
            if missing:
                raise InputFileError(
                    f"{source}:{lineno}: place {mid}: missing {', '.join(missing)}")
            partition[mid] = (kv["region"], kv["layer"])
            shapes[mid] = Shape(kv["w"], kv["h"])
        elif kind == "metrics":
            for tok in tokens[1:]:
                if "=" not in tok:
                    raise InputFileError(
                        f"{source}:{lineno}: expected key=value, got {tok!r}")
                k, v = tok.split("=", 1)
                try:
                    metrics[k] = float(v)
                except ValueError:
                    raise InputFileError(
                        f"{source}:{lineno}: bad metric {tok!r}") from None
        else:
            raise InputFileError(f"{source}:{lineno}: unknown directive {kind!r}")
    if ps is None or qs is None or rs is None:
        raise InputFileError(f"{source}: solution needs ps, qs, and rs lines")
    if set(ps) != set(partition):
        raise InputFileError(f"{source}: place lines do not match the ps line")
    pst = PST(ps=ps, qs=qs, rs=rs, partition=partition)
    return pst, shapes, metrics


def load_solution(path, g: TaskGraph, chip: ChipModel,
                  weights: CostWeights) -> Solution:
    """Read a solution file and re-evaluate it against graph and chip."""
    p = Path(path)
    pst, shapes, _ = parse_solution(p.read_text(encoding="utf-8"), source=str(p))
    from .pst import validate
    problems = validate(pst, g)
    if problems:
        raise InputFileError(f"{p}: invalid solution: {problems[0]}")
    return evaluate(pst, shapes, g, chip, weights)

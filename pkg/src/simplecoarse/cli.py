"""Command-line front end.

Every subcommand builds a run config, validates it against the shipped JSON
schema, dispatches to the library and writes a report.  Exit codes: 0 on
success, 1 on an operation error (message printed verbatim), 2 on a config
or input-file schema violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .asdim import arc_cover, build_collar_cover, diagonal_escape, interval_cover, shrinking_arc_covers, table_function
from .coarsemaps import CollarSpace, PointMap, are_close, is_bornologous_sampled, is_coarse_bornologous_sampled, linear_map, tabulated_map, word_homomorphism
from .ends import Budget, EndRelation, RelationKind, axis_ray, end_tree, equivalent, Ray
from .errors import CoarseError
from .higson import _compile, corona_partition, expression_field, is_slowly_oscillating, separating_family, sin_field, sin_log_field, so_defect_profile
from .largescale import ControlledSet, check_coarse_axioms
from .space import (
    FiniteGraph,
    FiniteMetricSpace,
    FreeGroupGraph,
    LazyGraph,
    ZdGraph,
    _hashable,
    ball,
    cycle_space,
    free_reduce,
    graph_metric_space,
    hyperbolicity_delta,
    to_jsonable,
)

COMMANDS = ("ends", "delta", "equiv", "so-profile", "corona", "axioms", "collar-cover", "diag", "maps")


class SchemaViolation(Exception):
    def __init__(self, where: str, message: str):
        super().__init__(f"schema violation at {where}: {message}")


def _schema(name: str) -> dict:
    return json.loads(resources.files("simplecoarse").joinpath("schemas", f"{name}.json").read_text())


def _validate(obj, name: str, where: str) -> None:
    try:
        jsonschema.validate(obj, _schema(name))
    except jsonschema.ValidationError as e:
        path = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in e.absolute_path)
        raise SchemaViolation(f"{where}{path}", e.message) from None


@dataclass
class RunConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    budget: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    format: str = "json"
    out: str | None = None
    seed: int = 0
    timing: bool = False

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "budget": self.budget,
            "params": self.params,
            "format": self.format,
            "out": self.out,
            "seed": self.seed,
            "timing": self.timing,
        }


# --------------------------------------------------------------------------
# loading inputs


def _load(arg: str | None, what: str):
    """Inline JSON (starting with { or [) or a path to a JSON file."""
    if arg is None:
        return None
    text = arg.strip()
    if text[:1] in "{[":
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise SchemaViolation(what, f"invalid inline JSON: {e.msg}") from None
    try:
        return json.loads(Path(arg).read_text())
    except FileNotFoundError:
        raise SchemaViolation(what, f"no such file {arg!r}") from None
    except json.JSONDecodeError as e:
        raise SchemaViolation(what, f"invalid JSON in {arg!r}: {e.msg}") from None


def build_graph(desc: dict, where: str = "graph") -> LazyGraph:
    _validate(desc, "graph", where)
    if desc["type"] == "zd":
        return ZdGraph(desc["d"])
    if desc["type"] == "free":
        return FreeGroupGraph(desc["rank"])
    return FiniteGraph(desc["edges"], desc["root"])


def decode_point(graph, raw):
    if isinstance(graph, FreeGroupGraph):
        return free_reduce(str(raw))
    return _hashable(raw)


def build_space(desc: dict) -> FiniteMetricSpace:
    _validate(desc, "space", "space")
    if "dist" in desc:
        d = [[math.inf if v in ("inf", "Infinity") else float(v) for v in row] for row in desc["dist"]]
        return FiniteMetricSpace(tuple(_hashable(p) for p in desc["points"]), np.array(d))
    if "cycle" in desc:
        return cycle_space(desc["cycle"], desc.get("circumference", 1.0))
    if "graph" in desc:
        g = build_graph(desc["graph"], "space.graph")
        center = decode_point(g, desc["center"]) if "center" in desc else g.root
        return ball(g, center, desc["radius"], desc.get("margin"))
    return graph_metric_space(FiniteGraph(desc["edges"], desc["root"]))


def build_ray(desc: dict, graph: LazyGraph, length: int, where: str) -> Ray:
    _validate(desc, "ray", where)
    if "points" in desc:
        pts = tuple(decode_point(graph, p) for p in desc["points"])
        return Ray(pts, graph, label=desc.get("label", ""))
    g = build_graph(desc["graph"], f"{where}.graph") if "graph" in desc else graph
    if g != graph:
        raise CoarseError(f"{where}: ray graph differs from the command's graph")
    direction = desc["direction"]
    offset = desc.get("offset")
    return axis_ray(graph, direction, desc.get("length", length), offset, desc.get("label", ""))


def build_map(desc: dict, source, target, where: str) -> PointMap:
    _validate(desc, "map", where)
    kind = desc["type"]
    if kind == "linear":
        return linear_map(desc["matrix"], source, target, desc.get("offset"))
    if kind == "hom":
        return word_homomorphism(desc["images"], source, target)
    if kind == "table":
        return tabulated_map({decode_point(source, a): decode_point(target, b) for a, b in desc["pairs"]}, source, target)
    d = len(source.root) if isinstance(source.root, tuple) else 1
    names = [f"x{i}" for i in range(d)] + ["n"]
    runs = [_compile(c, names) for c in desc["coords"]]

    def f(p):
        env = {f"x{i}": c for i, c in enumerate(p)}
        env["n"] = p[0]
        return tuple(int(round(r(env))) for r in runs)

    return PointMap(f, source, target, "expr" + ",".join(desc["coords"]))


def _budget(cfg: RunConfig) -> Budget:
    b = cfg.budget
    return Budget(
        max_scale=b.get("max_scale"),
        schedule=tuple(b["schedule"]) if b.get("schedule") else None,
        cap=b.get("cap"),
        min_length=b.get("min_length", 8),
    )


def _relation(kind: str, graph, fields=None) -> EndRelation:
    kind = RelationKind(kind.replace("-", "_"))
    if kind is RelationKind.METRIC:
        return EndRelation.metric(graph)
    if kind is RelationKind.C0:
        return EndRelation.c0(graph)
    if kind is RelationKind.BOUNDARY_METRIC:
        return EndRelation.boundary_metric(graph)
    if kind is RelationKind.FUNCTION_FAMILY:
        return EndRelation.function_family(graph, fields or [])
    if kind is RelationKind.GROUP_LEFT:
        return EndRelation.group_left(graph)
    if kind is RelationKind.GROMOV:
        return EndRelation.gromov(graph)
    return EndRelation.freudenthal(graph)


def _field(desc: str, graph):
    if desc == "sinlog":
        return sin_log_field()
    if desc == "sin":
        return sin_field()
    return expression_field(desc, graph)


# --------------------------------------------------------------------------
# commands


def _cmd_ends(cfg):
    g = build_graph(cfg.inputs["graph"])
    levels = cfg.params["levels"]
    base = decode_point(g, cfg.params["base"]) if cfg.params.get("base") is not None else g.root
    tree = end_tree(g, base, levels)
    out = {"counts": [tree.count(r) for r in tree.schedule], "tree": tree.to_json(), "dot": tree.to_dot()}
    return out, {"dot": tree.to_dot()}


def _cmd_delta(cfg):
    X = build_space(cfg.inputs["space"])
    base = cfg.params.get("base")
    res = hyperbolicity_delta(X, _hashable(base) if base is not None else None)
    return {"delta": res.delta, "witness": to_jsonable(res.witness), "points": len(X)}, {}


def _cmd_equiv(cfg):
    g = build_graph(cfg.inputs["graph"])
    length = cfg.params.get("length", 64)
    x = build_ray(cfg.inputs["x"], g, length, "x")
    y = build_ray(cfg.inputs["y"], g, length, "y")
    fields = [_field(s, g) for s in cfg.params.get("fields", [])]
    rel = _relation(cfg.params["relation"], g, fields)
    v = equivalent(rel, x, y, _budget(cfg))
    return {"relation": rel.kind.value, "verdict": v.to_dict()}, {}


def _cmd_so_profile(cfg):
    g = build_graph(cfg.inputs["graph"])
    f = _field(cfg.params["field"], g)
    prof = so_defect_profile(f, g, g.root, cfg.params["meshes"], cfg.params["radii"], cfg.params.get("horizon"))
    out = {
        "horizon": prof.horizon,
        "entries": [
            {"r": e.radius, "M": e.mesh, "defect": e.defect, "witness": to_jsonable(e.center)} for e in prof.entries
        ],
    }
    if cfg.params.get("schedule"):
        out["verdict"] = is_slowly_oscillating(prof, [tuple(s) for s in cfg.params["schedule"]]).to_dict()
    return out, {"csv": prof.to_csv()}


def _cmd_corona(cfg):
    g = build_graph(cfg.inputs["graph"])
    length = cfg.params.get("length", 64)
    specs = cfg.inputs["rays"]
    if not isinstance(specs, list):
        raise SchemaViolation("rays", "expected an array of ray specs")
    rays = [build_ray(s, g, length, f"rays[{i}]") for i, s in enumerate(specs)]
    if cfg.params.get("separating_level") is not None:
        lvl = cfg.params["separating_level"]
        tree = end_tree(g, g.root, [lvl])
        src = separating_family(g, tree, lvl, cfg.params.get("width", 20))
    elif cfg.params.get("fields"):
        src = [_field(s, g) for s in cfg.params["fields"]]
    else:
        src = _relation(cfg.params.get("relation", "metric"), g)
    part = corona_partition(rays, src, _budget(cfg))
    return {
        "classes": [list(c) for c in part.classes],
        "inconclusive": [list(p) for p in part.inconclusive],
        "verdicts": [{"pair": list(k), **v.to_dict()} for k, v in part.verdicts.items()],
    }, {}


def _cmd_axioms(cfg):
    gens_raw = cfg.inputs["generators"]
    if not isinstance(gens_raw, list):
        raise SchemaViolation("generators", "expected an array of pair arrays")
    gens = [ControlledSet(frozenset((_hashable(a), _hashable(b)) for a, b in g)) for g in gens_raw]
    universe = cfg.inputs.get("universe")
    if universe is None:
        universe = sorted({p for E in gens for p in E.points}, key=repr)
    else:
        universe = [_hashable(p) for p in universe]
    rep = check_coarse_axioms(gens, universe, cfg.params.get("depth", 3))
    out = rep.to_json()
    out["inverses"] = [E.to_json() for E in rep.inverses]
    out["unions"] = [{"pair": list(k), "set": v.to_json()} for k, v in rep.unions.items()]
    out["compositions"] = [{"pair": list(k), "set": v.to_json()} for k, v in rep.compositions.items()]
    return out, {}


def _cmd_collar_cover(cfg):
    boundary = cfg.params.get("boundary", "point")
    if boundary == "point":
        A = FiniteMetricSpace(("p",), np.zeros((1, 1)))
    elif boundary.startswith("cycle:"):
        A = cycle_space(int(boundary.split(":", 1)[1]))
    else:
        raise SchemaViolation("params.boundary", f"expected 'point' or 'cycle:N', got {boundary!r}")
    k = cfg.params.get("k", 0 if len(A) == 1 else 1)
    depth = cfg.params.get("depth", 64)
    collar = CollarSpace(A, depth)
    Vs = shrinking_arc_covers(A, k, cfg.params.get("covers", depth))

    def cols(j):
        # shrinking boxes: arcs of width w with w / len(A) <= 1 / (2 j)
        w = max(1, min(len(A), int(len(A) / (2 * j))))
        return arc_cover(A, w).elements

    U = interval_cover(collar, cols)
    plan = build_collar_cover(A, Vs, U, k, collar, cfg.params.get("steps"))
    return plan.to_json(), {}


def _cmd_diag(cfg):
    fam = cfg.params.get("family", "zero")
    rmax = cfg.params["rmax"]
    if fam == "zero":
        S = [lambda i, R: 0]
    elif fam == "index":
        S = [lambda i, R: i]
    elif fam.startswith("const:"):
        vals = [int(v) for v in fam.split(":", 1)[1].split(",")]
        S = [lambda i, R, c=c: c for c in vals]
    elif fam.startswith("random:"):
        size = int(fam.split(":", 1)[1])
        rng = np.random.default_rng(cfg.seed)
        tables = [rng.integers(0, 100, size=(size, rmax)).tolist() for _ in range(size)]
        S = [table_function(t) for t in tables]
    elif fam == "tables":
        tables = cfg.inputs.get("tables")
        if not isinstance(tables, list) or not tables:
            raise SchemaViolation("tables", "expected a nonempty array of tables")
        S = [table_function(t) for t in tables]
    else:
        raise SchemaViolation("params.family", f"unknown family {fam!r}")
    res = diagonal_escape(S, rmax)
    return res.to_json(), {}


def _cmd_maps(cfg):
    g = build_graph(cfg.inputs["graph"])
    length = cfg.params.get("length", 64)
    rays = [build_ray(s, g, length, f"rays[{i}]") for i, s in enumerate(cfg.inputs["rays"])]
    f = build_map(cfg.inputs["map"], g, g, "map")
    rel = _relation(cfg.params.get("relation", "metric"), g)
    check = cfg.params.get("check", "coarse")
    budget = _budget(cfg)
    if check == "close":
        if "map2" not in cfg.inputs:
            raise SchemaViolation("map2", "closeness needs a second map")
        h = build_map(cfg.inputs["map2"], g, g, "map2")
        v = are_close(f, h, rel, rays, budget)
    elif check == "bornologous":
        pairs = [(rays[i], rays[i + 1]) for i in range(0, len(rays) - 1, 2)]
        v = is_bornologous_sampled(f, rel, rel, pairs, budget=budget)
    else:
        v = is_coarse_bornologous_sampled(f, rel, rel, rays, budget=budget)
    return {"check": check, "verdict": v.to_dict()}, {}


DISPATCH = {
    "ends": _cmd_ends,
    "delta": _cmd_delta,
    "equiv": _cmd_equiv,
    "so-profile": _cmd_so_profile,
    "corona": _cmd_corona,
    "axioms": _cmd_axioms,
    "collar-cover": _cmd_collar_cover,
    "diag": _cmd_diag,
    "maps": _cmd_maps,
}


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, (set, frozenset)):
        return to_jsonable(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _clean(o):
    """Replace non-finite floats by strings so the output is strict JSON."""
    if isinstance(o, float) and not math.isfinite(o):
        return "inf" if o > 0 else ("-inf" if o < 0 else "nan")
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


def run(cfg: RunConfig) -> tuple[int, str]:
    """Execute a config; returns (exit status, text written)."""
    try:
        _validate(cfg.as_dict(), "run_config", "config")
        start = time.perf_counter()
        result, extras = DISPATCH[cfg.command](cfg)
        elapsed = time.perf_counter() - start
    except SchemaViolation as e:
        print(str(e), file=sys.stderr)
        return 2, ""
    except (CoarseError, ValueError, KeyError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1, ""
    if cfg.format == "dot" and "dot" in extras:
        text = extras["dot"]
    elif cfg.format == "csv" and "csv" in extras:
        text = extras["csv"]
    else:
        report = {"version": __version__, "config": cfg.as_dict(), "result": result}
        if cfg.timing:
            report["seconds"] = round(elapsed, 6)
        text = json.dumps(_clean(report), indent=2, default=_json_default) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0, text


# --------------------------------------------------------------------------
# argument parsing


def _ints(s):
    return [int(v) for v in s.split(",") if v.strip()]


def _floats(s):
    return [float(v) for v in s.split(",") if v.strip()]


def _pairs(s):
    """'0.5:40,0.25:160' -> [[0.5, 40], [0.25, 160]]"""
    out = []
    for item in s.split(","):
        eps, r = item.split(":")
        out.append([float(eps), int(r)])
    return out


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simplecoarse", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "dot", "csv"], default="json")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identical output)")
    common.add_argument("--max-scale", type=float, default=None)
    common.add_argument("--schedule", type=_floats, default=None, help="comma-separated budget schedule")
    common.add_argument("--cap", type=float, default=None)
    common.add_argument("--min-length", type=int, default=None)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ends", parents=[common], help="end tree of a graph")
    s.add_argument("--graph", required=True)
    s.add_argument("--levels", type=_ints, required=True)
    s.add_argument("--base", default=None)

    s = sub.add_parser("delta", parents=[common], help="hyperbolicity constant of a finite space")
    s.add_argument("--space", required=True)
    s.add_argument("--base", default=None)

    s = sub.add_parser("equiv", parents=[common], help="compare two rays under a relation")
    s.add_argument("--graph", required=True)
    s.add_argument("--relation", required=True, choices=[k.value for k in RelationKind])
    s.add_argument("--x", required=True)
    s.add_argument("--y", required=True)
    s.add_argument("--length", type=int, default=64)
    s.add_argument("--field", action="append", default=[], help="field for function_family (repeatable)")

    s = sub.add_parser("so-profile", parents=[common], help="oscillation defect profile of a field")
    s.add_argument("--graph", required=True)
    s.add_argument("--field", required=True, help="'sinlog', 'sin', or an expression in n and r")
    s.add_argument("--meshes", type=_floats, required=True)
    s.add_argument("--radii", type=_ints, required=True)
    s.add_argument("--horizon", type=int, default=None)
    s.add_argument("--so-schedule", type=_pairs, default=None, help="eps:r pairs for the verdict")

    s = sub.add_parser("corona", parents=[common], help="partition a ray sample into end classes")
    s.add_argument("--graph", required=True)
    s.add_argument("--rays", required=True)
    s.add_argument("--relation", default="metric", choices=[k.value for k in RelationKind])
    s.add_argument("--field", action="append", default=[])
    s.add_argument("--separating-level", type=int, default=None)
    s.add_argument("--width", type=int, default=20)
    s.add_argument("--length", type=int, default=64)

    s = sub.add_parser("axioms", parents=[common], help="closure of controlled sets under the coarse axioms")
    s.add_argument("--generators", required=True)
    s.add_argument("--universe", default=None)
    s.add_argument("--depth", type=int, default=3)

    s = sub.add_parser("collar-cover", parents=[common], help="banded cover of a collar")
    s.add_argument("--boundary", default="point", help="'point' or 'cycle:N'")
    s.add_argument("--k", type=int, default=None)
    s.add_argument("--depth", type=int, default=64)
    s.add_argument("--steps", type=int, default=None)

    s = sub.add_parser("diag", parents=[common], help="diagonal escape function")
    s.add_argument("--family", default="zero", help="zero | index | const:a,b,... | random:SIZE | tables")
    s.add_argument("--tables", default=None)
    s.add_argument("--rmax", type=int, required=True)

    s = sub.add_parser("maps", parents=[common], help="sampled checks of a map")
    s.add_argument("--graph", required=True)
    s.add_argument("--map", required=True)
    s.add_argument("--map2", default=None)
    s.add_argument("--rays", required=True)
    s.add_argument("--relation", default="metric", choices=[k.value for k in RelationKind])
    s.add_argument("--check", choices=["bornologous", "coarse", "close"], default="coarse")
    s.add_argument("--length", type=int, default=64)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    budget = {}
    for key in ("max_scale", "schedule", "cap", "min_length"):
        val = getattr(ns, key)
        if val is not None:
            budget[key] = val
    inputs, params = {}, {}
    c = ns.command
    if c == "ends":
        inputs["graph"] = _load(ns.graph, "graph")
        params = {"levels": ns.levels, "base": _maybe_json(ns.base)}
    elif c == "delta":
        inputs["space"] = _load(ns.space, "space")
        params = {"base": _maybe_json(ns.base)}
    elif c == "equiv":
        inputs = {"graph": _load(ns.graph, "graph"), "x": _load(ns.x, "x"), "y": _load(ns.y, "y")}
        params = {"relation": ns.relation, "length": ns.length, "fields": ns.field}
    elif c == "so-profile":
        inputs["graph"] = _load(ns.graph, "graph")
        params = {"field": ns.field, "meshes": ns.meshes, "radii": ns.radii, "horizon": ns.horizon, "schedule": ns.so_schedule}
    elif c == "corona":
        inputs = {"graph": _load(ns.graph, "graph"), "rays": _load(ns.rays, "rays")}
        params = {
            "relation": ns.relation,
            "fields": ns.field,
            "separating_level": ns.separating_level,
            "width": ns.width,
            "length": ns.length,
        }
    elif c == "axioms":
        inputs = {"generators": _load(ns.generators, "generators")}
        if ns.universe is not None:
            inputs["universe"] = _load(ns.universe, "universe")
        params = {"depth": ns.depth}
    elif c == "collar-cover":
        params = {"boundary": ns.boundary, "k": ns.k, "depth": ns.depth, "steps": ns.steps}
        params = {k: v for k, v in params.items() if v is not None}
    elif c == "diag":
        params = {"family": ns.family, "rmax": ns.rmax}
        if ns.tables is not None:
            inputs["tables"] = _load(ns.tables, "tables")
    elif c == "maps":
        inputs = {"graph": _load(ns.graph, "graph"), "map": _load(ns.map, "map"), "rays": _load(ns.rays, "rays")}
        if ns.map2 is not None:
            inputs["map2"] = _load(ns.map2, "map2")
        params = {"relation": ns.relation, "check": ns.check, "length": ns.length}
    return RunConfig(c, inputs, budget, params, ns.format, ns.out, ns.seed, ns.timing)


def _maybe_json(s):
    if s is None:
        return None
    try:
        return json.loads(s)
    except json.JSONDecodeError:
        return s


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except SchemaViolation as e:
        print(str(e), file=sys.stderr)
        return 2
    status, _ = run(cfg)
    return status


if __name__ == "__main__":
    sys.exit(main())

"""Slowly oscillating functions: defect profiles, corona partitions of ray
samples, and ramp functions separating ends of graphs.
"""

from __future__ import annotations

import ast
import csv
import functools
import io
import math
import operator
import warnings
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field

from networkx.utils import UnionFind

from .ends import DISTINGUISHED, EQUIVALENT, Budget, EndRelation, EndTree, Ray, ScaleVerdict, equivalent
from .errors import FieldRangeError, InputError
from .space import LazyGraph, Point, bfs, component_of, to_jsonable


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A function from points to [0, 1].

    Values outside [0, 1] raise FieldRangeError; nothing is clamped.
    """

    f: Callable[[Point], float]
    tag: str = ""

    def __call__(self, p: Point) -> float:
        v = float(self.f(p))
        if not 0.0 <= v <= 1.0:
            raise FieldRangeError(f"field {self.tag or self.f!r} has value {v} at {p!r}")
        return v

    def __repr__(self):
        return f"ScalarField({self.tag})"


def constant_field(c: float) -> ScalarField:
    return ScalarField(lambda p: c, f"const({c})")


def _first(p):
    return p[0] if isinstance(p, tuple) else p


def sin_log_field() -> ScalarField:
    """(1 + sin(log(1 + |n|))) / 2 on Z: oscillation dies out at infinity."""
    return ScalarField(lambda p: 0.5 * (1 + math.sin(math.log1p(abs(_first(p))))), "sinlog")


def sin_field() -> ScalarField:
    """(1 + sin n) / 2 on Z: full oscillation on every window of length 5."""
    return ScalarField(lambda p: 0.5 * (1 + math.sin(_first(p))), "sin")


# a tiny arithmetic language for fields in CLI configs

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.FloorDiv: operator.floordiv,
    ast.Mod: operator.mod,
}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {
    "abs": abs,
    "log": math.log,
    "log1p": math.log1p,
    "sqrt": math.sqrt,
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "min": min,
    "max": max,
    "clamp": lambda v, lo=0.0, hi=1.0: min(max(v, lo), hi),
}
_CONSTS = {"pi": math.pi, "e": math.e}


def _compile(expr: str, names: Sequence[str] = ("n", "r")):
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as e:
        raise InputError(f"bad field expression {expr!r}: {e.msg}") from None

    def ev(node, env):
        if isinstance(node, ast.Expression):
            return ev(node.body, env)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left, env), ev(node.right, env))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand, env))
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            if node.id in _CONSTS:
                return _CONSTS[node.id]
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            return _FUNCS[node.func.id](*(ev(a, env) for a in node.args))
        raise InputError(f"unsupported construct in field expression {expr!r}: {ast.dump(node)[:60]}")

    try:
        ev(tree, {k: 1.0 for k in names})  # reject unknown names up front
    except (ArithmeticError, ValueError) as e:
        if isinstance(e, InputError):
            raise
    return lambda env: ev(tree, env)


def expression_field(expr: str, graph: LazyGraph | None = None) -> ScalarField:
    """Field from an arithmetic expression in ``n`` (first coordinate) and
    ``r`` (distance to the graph's root), e.g. ``(1 + sin(log(1 + r))) / 2``."""
    run = _compile(expr)

    def f(p):
        n = _first(p) if not isinstance(p, str) else 0
        r = graph.size(p, graph.root) if graph is not None else abs(n)
        return run({"n": n, "r": r})

    return ScalarField(f, expr)


# --------------------------------------------------------------------------
# defect profiles


@dataclass(frozen=True)
class SOEntry:
    radius: int
    mesh: float
    defect: float
    center: Point
    window: tuple


@dataclass(frozen=True)
class SOProfile:
    """Oscillation of a field over balls of diameter <= M missing B(base, r).

    Each entry records the maximizing ball (``center`` and its points).  The
    scanned region ends at ``horizon``.
    """

    entries: tuple
    base: Point
    horizon: int
    tag: str = ""
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {(e.radius, e.mesh): e for e in self.entries})

    def entry(self, r, M) -> SOEntry:
        try:
            return self._index[(r, M)]
        except KeyError:
            raise InputError(f"profile has no entry for radius {r}, mesh {M}") from None

    def defect(self, r, M) -> float:
        return self.entry(r, M).defect

    @property
    def radii(self) -> list:
        return sorted({e.radius for e in self.entries})

    @property
    def meshes(self) -> list:
        return sorted({e.mesh for e in self.entries})

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "M", "defect", "witness"])
        for e in self.entries:
            w.writerow([e.radius, e.mesh, repr(e.defect), _point_str(e.center)])
        return buf.getvalue()


def _point_str(p) -> str:
    if isinstance(p, tuple):
        return " ".join(str(c) for c in p)
    return str(p)


def so_defect_profile(
    field: Callable[[Point], float],
    graph: LazyGraph,
    base: Point,
    meshes: Sequence[float],
    radii: Sequence[int],
    horizon: int | None = None,
) -> SOProfile:
    """Defect d(r, M): the largest oscillation of ``field`` over a closed ball
    of radius floor(M/2) lying outside B(base, r) and inside B(base, horizon).

    The default horizon is 2 * max(radii) + max(meshes) + 1.
    """
    radii, meshes = list(radii), list(meshes)
    if not radii or not meshes:
        raise InputError("radii and meshes must be nonempty")
    if any(a >= b for a, b in zip(radii, radii[1:])) or radii[0] < 0:
        raise InputError(f"radii must be nonnegative and increasing: {radii}")
    if any(M <= 0 for M in meshes):
        raise InputError(f"meshes must be positive: {meshes}")
    if horizon is None:
        horizon = int(2 * radii[-1] + max(meshes) + 1)
    dist = bfs(graph, base, limit=horizon)
    pts = list(dist)
    vals = {}
    for p in pts:
        v = float(field(p))
        if not 0.0 <= v <= 1.0:
            raise FieldRangeError(f"field value {v} outside [0, 1] at {p!r}")
        vals[p] = v

    entries = []
    for M in meshes:
        rho = int(M // 2)
        # oscillation over each ball that fits inside the horizon, keyed by center
        centers = [p for p in pts if dist[p] + rho <= horizon]
        osc = {}
        wins = {}
        for c in centers:
            win = tuple(bfs(graph, c, limit=rho))
            vs = [vals[q] for q in win]
            osc[c] = max(vs) - min(vs)
            wins[c] = win
        for r in radii:
            best, arg = 0.0, None
            for c in centers:
                if dist[c] - rho > r and (arg is None or osc[c] > best):
                    best, arg = osc[c], c
            entries.append(SOEntry(r, M, best, arg, wins.get(arg, ())))
    return SOProfile(tuple(entries), base, horizon, getattr(field, "tag", ""))


def is_slowly_oscillating(profile: SOProfile, schedule: Iterable[tuple[float, int]]) -> ScaleVerdict:
    """EQUIVALENT iff d(r, M) < eps for every scheduled (eps, r) and every mesh."""
    schedule = list(schedule)
    if not schedule:
        raise InputError("schedule is empty")
    for eps, r in schedule:
        for M in profile.meshes:
            e = profile.entry(r, M)
            if e.defect >= eps:
                return DISTINGUISHED(
                    {
                        "radius": r,
                        "mesh": M,
                        "epsilon": eps,
                        "defect": e.defect,
                        "center": to_jsonable(e.center),
                        "window": to_jsonable(list(e.window)),
                    }
                )
    return EQUIVALENT(schedule=[list(s) for s in schedule], meshes=profile.meshes)


# --------------------------------------------------------------------------
# corona partitions


@dataclass(frozen=True)
class CoronaPartition:
    """Classes of a ray sample (lists of sample indices).

    Only EQUIVALENT verdicts merge classes; INCONCLUSIVE pairs are listed in
    ``inconclusive``.
    """

    classes: tuple
    inconclusive: tuple
    verdicts: dict

    def class_of(self, i: int) -> tuple:
        return next(c for c in self.classes if i in c)

    def same_as(self, other: CoronaPartition) -> bool:
        return set(self.classes) == set(other.classes)


def corona_partition(
    rays: Sequence[Ray],
    rel_or_fields: EndRelation | Sequence[Callable],
    budget: Budget | None = None,
) -> CoronaPartition:
    rays = list(rays)
    if isinstance(rel_or_fields, EndRelation):
        rel = rel_or_fields
    else:
        if not rays:
            return CoronaPartition((), (), {})
        rel = EndRelation.function_family(rays[0].carrier, rel_or_fields)
    uf = UnionFind(range(len(rays)))
    verdicts, pending = {}, []
    for i in range(len(rays)):
        for j in range(i + 1, len(rays)):
            v = equivalent(rel, rays[i], rays[j], budget)
            verdicts[(i, j)] = v
            if v.equivalent:
                uf.union(i, j)
            elif v.inconclusive:
                pending.append((i, j))
    classes = sorted(tuple(sorted(s)) for s in uf.to_sets())
    return CoronaPartition(tuple(classes), tuple(pending), verdicts)


# --------------------------------------------------------------------------
# separating functions


def separating_so_function(
    graph: LazyGraph,
    tree: EndTree,
    component: Point,
    level: int | None = None,
    width: int = 20,
) -> ScalarField:
    """Ramp that is 0 far out in ``component`` and 1 everywhere else.

    With r = ``level`` (default: first level of the tree containing the
    component) and t(x) = clip((d(x, base) - r) / width, 0, 1):
    f(x) = 1 - t(x) on the chosen component and 1 off it.  f is
    1/width-Lipschitz, so a set of diameter M oscillates by at most
    M / width, and f is constant on each component beyond r + width.
    """
    if width <= 0:
        raise InputError("ramp width must be positive")
    if level is None:
        level = next((r for r in tree.schedule if component in tree.levels[r]), None)
        if level is None:
            raise InputError(f"component {component!r} is not in the end tree")
    if level not in tree.levels:
        raise InputError(f"level {level} not in schedule {tree.schedule}")
    comps = tree.levels[level]
    if component not in comps:
        raise InputError(f"component {component!r} absent at level {level}")
    if len(comps) == 1:
        warnings.warn("no complementary component: the separating function is constant 0", stacklevel=2)
        return ScalarField(lambda p: 0.0, "sep(const0)")
    base, h = tree.base, tree.horizons[level]

    @functools.lru_cache(maxsize=65536)
    def f(p):
        d = graph.distance(p, base)
        if d <= level:
            return 1.0
        if component_of(graph, base, level, h, p) != component:
            return 1.0
        return 1.0 - min(d - level, width) / width

    return ScalarField(f, f"sep({_point_str(component)}@{level},w={width})")


def separating_family(graph: LazyGraph, tree: EndTree, level: int, width: int = 20) -> list[ScalarField]:
    """One separating field per unbounded component at ``level``."""
    return [separating_so_function(graph, tree, c, level, width) for c in tree.levels[level]]
